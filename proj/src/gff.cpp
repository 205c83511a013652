#include "slelqg/gff.hpp"

#include <fftw3.h>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>

#include "slelqg/errors.hpp"
#include "slelqg/rng.hpp"

namespace slelqg {

namespace {

constexpr double kPi = std::numbers::pi;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// In-place separable 2-D real-to-real transform of a rows x cols array.
void r2r_2d(std::vector<double>& data, int rows, int cols, fftw_r2r_kind kind) {
  double* buf = fftw_alloc_real(data.size());
  std::copy(data.begin(), data.end(), buf);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_r2r_2d(rows, cols, buf, buf, kind, kind, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::copy(buf, buf + data.size(), data.begin());
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
}

double sin2(double x) {
  const double s = std::sin(x);
  return s * s;
}

/// Dirichlet sine-series sample on the interior of an (n+1) x (n+1) node
/// lattice with spacings hx, hy. Returns the full lattice, zero on the edge.
std::vector<double> sample_dirichlet_box(int n, double hx, double hy, std::uint64_t seed) {
  const int m = n - 1;
  const double lx = n * hx;
  const double ly = n * hy;
  const double norm = 2.0 / std::sqrt(lx * ly);
  std::vector<double> coeff(static_cast<std::size_t>(m) * m);
  for (int l = 1; l <= m; ++l) {
    for (int k = 1; k <= m; ++k) {
      const double lambda = 4.0 / (hx * hx) * sin2(kPi * k / (2.0 * n)) +
                            4.0 / (hy * hy) * sin2(kPi * l / (2.0 * n));
      const std::uint64_t mode = static_cast<std::uint64_t>(l) * n + k;
      // RODFT00 doubles each sine sum, hence the 1/4 over two dimensions.
      coeff[static_cast<std::size_t>(l - 1) * m + (k - 1)] =
          0.25 * norm * std::sqrt(2.0 * kPi / lambda) * rng::normal(seed, mode);
    }
  }
  r2r_2d(coeff, m, m, FFTW_RODFT00);
  std::vector<double> full(static_cast<std::size_t>(n + 1) * (n + 1), 0.0);
  for (int j = 1; j <= m; ++j) {
    for (int i = 1; i <= m; ++i) {
      full[static_cast<std::size_t>(j) * (n + 1) + i] = coeff[static_cast<std::size_t>(j - 1) * m + (i - 1)];
    }
  }
  return full;
}

/// Neumann cosine-series sample on an n x n cell-centred lattice, constant
/// mode removed.
std::vector<double> sample_neumann_box(int n, double hx, double hy, std::uint64_t seed) {
  const double lx = n * hx;
  const double ly = n * hy;
  std::vector<double> coeff(static_cast<std::size_t>(n) * n, 0.0);
  for (int l = 0; l < n; ++l) {
    for (int k = 0; k < n; ++k) {
      if (k == 0 && l == 0) continue;
      const double lambda = 4.0 / (hx * hx) * sin2(kPi * k / (2.0 * n)) +
                            4.0 / (hy * hy) * sin2(kPi * l / (2.0 * n));
      const double ak = k == 0 ? std::sqrt(1.0 / lx) : std::sqrt(2.0 / lx);
      const double al = l == 0 ? std::sqrt(1.0 / ly) : std::sqrt(2.0 / ly);
      // REDFT01 doubles every non-constant cosine term.
      const double sk = k == 0 ? 1.0 : 0.5;
      const double sl = l == 0 ? 1.0 : 0.5;
      const std::uint64_t mode = static_cast<std::uint64_t>(l) * n + k;
      coeff[static_cast<std::size_t>(l) * n + k] =
          sk * sl * ak * al * std::sqrt(2.0 * kPi / lambda) * rng::normal(seed, mode);
    }
  }
  r2r_2d(coeff, n, n, FFTW_REDFT01);
  return coeff;
}

/// Sparse Cholesky factor of the discrete Laplacian on the lattice nodes
/// strictly inside the unit disc.
struct DiscHarmonicSolver {
  int n = 0;
  std::vector<int> unknown;  // node -> unknown index, -1 outside
  std::vector<int> nodes;    // unknown index -> node
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
};

std::shared_ptr<const DiscHarmonicSolver> disc_solver(const GridField& lattice) {
  static std::mutex cache_mutex;
  static std::map<int, std::shared_ptr<const DiscHarmonicSolver>> cache;
  std::lock_guard lock(cache_mutex);
  const int n = lattice.n();
  if (auto it = cache.find(n); it != cache.end()) return it->second;

  auto solver = std::make_shared<DiscHarmonicSolver>();
  solver->n = n;
  const int side = n + 1;
  solver->unknown.assign(static_cast<std::size_t>(side) * side, -1);
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      if (lattice.interior_node(i, j)) {
        solver->unknown[static_cast<std::size_t>(j) * side + i] = static_cast<int>(solver->nodes.size());
        solver->nodes.push_back(j * side + i);
      }
    }
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(solver->nodes.size() * 5);
  for (std::size_t u = 0; u < solver->nodes.size(); ++u) {
    const int i = solver->nodes[u] % side;
    const int j = solver->nodes[u] / side;
    entries.emplace_back(static_cast<int>(u), static_cast<int>(u), 4.0);
    for (const auto& [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      const int v = solver->unknown[static_cast<std::size_t>(j + dj) * side + (i + di)];
      if (v >= 0) entries.emplace_back(static_cast<int>(u), v, -1.0);
    }
  }
  const auto size = static_cast<Eigen::Index>(solver->nodes.size());
  Eigen::SparseMatrix<double> a(size, size);
  a.setFromTriplets(entries.begin(), entries.end());
  solver->llt.compute(a);
  if (solver->llt.info() != Eigen::Success) {
    throw std::runtime_error("disc Laplacian factorization failed");
  }
  cache.emplace(n, solver);
  return solver;
}

/// Replaces a square Dirichlet sample by its disc-conditioned part: subtract
/// the discrete harmonic extension of the values off the disc.
void restrict_to_disc(GridField& field) {
  const auto solver = disc_solver(field);
  const int side = field.nx();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(solver->nodes.size()));
  for (std::size_t u = 0; u < solver->nodes.size(); ++u) {
    const int i = solver->nodes[u] % side;
    const int j = solver->nodes[u] / side;
    for (const auto& [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      if (solver->unknown[static_cast<std::size_t>(j + dj) * side + (i + di)] < 0) {
        rhs[static_cast<Eigen::Index>(u)] += field.at(i + di, j + dj);
      }
    }
  }
  const Eigen::VectorXd harmonic = solver->llt.solve(rhs);
  std::vector<double> out(field.values().size(), 0.0);
  for (std::size_t u = 0; u < solver->nodes.size(); ++u) {
    const auto node = static_cast<std::size_t>(solver->nodes[u]);
    out[node] = field.values()[node] - harmonic[static_cast<Eigen::Index>(u)];
  }
  field.values() = std::move(out);
}

void require_epsilon(double epsilon, double spacing) {
  if (!std::isfinite(epsilon) || epsilon < 2.0 * spacing * (1.0 - 1e-12)) {
    throw DomainError("epsilon must be at least two lattice spacings");
  }
}

void require_circle_inside(const GridField& field, Complex z, double epsilon) {
  if (field.bc() == BoundaryCondition::Dirichlet) return;
  const double tol = 1e-12;
  if (z.real() - epsilon < field.x_min() - tol || z.real() + epsilon > field.x_max() + tol ||
      z.imag() - epsilon < field.y_min() - tol || z.imag() + epsilon > field.y_max() + tol) {
    throw GeometryError("circle of radius " + std::to_string(epsilon) + " exits the field box");
  }
}

}  // namespace

std::string to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::Dirichlet ? "dirichlet" : "neumann";
}

GridField make_grid_field(const GridDomain& domain, int n, BoundaryCondition bc) {
  if (n < 16) throw ConfigError("grid resolution must be at least 16");
  GridField f;
  f.domain_ = domain;
  f.n_ = n;
  f.bc_ = bc;
  if (std::holds_alternative<UnitDisc>(domain)) {
    if (bc != BoundaryCondition::Dirichlet) {
      throw ConfigError("the unit disc supports Dirichlet boundary conditions only");
    }
    f.nx_ = f.ny_ = n + 1;
    f.hx_ = f.hy_ = 2.0 / n;
    f.x0_ = f.y0_ = -1.0;
    f.x_min_ = f.y_min_ = -1.0;
    f.x_max_ = f.y_max_ = 1.0;
  } else {
    const auto box = std::get<HalfPlaneBox>(domain);
    if (!(box.half_width > 0.0 && box.height > 0.0)) throw ConfigError("box dimensions must be positive");
    f.hx_ = 2.0 * box.half_width / n;
    f.hy_ = box.height / n;
    f.x_min_ = -box.half_width;
    f.x_max_ = box.half_width;
    f.y_min_ = 0.0;
    f.y_max_ = box.height;
    if (bc == BoundaryCondition::Dirichlet) {
      f.nx_ = f.ny_ = n + 1;
      f.x0_ = f.x_min_;
      f.y0_ = 0.0;
    } else {
      f.nx_ = f.ny_ = n;
      f.x0_ = f.x_min_ + 0.5 * f.hx_;
      f.y0_ = 0.5 * f.hy_;
    }
  }
  f.values_.assign(static_cast<std::size_t>(f.nx_) * f.ny_, 0.0);
  return f;
}

GridField sample_gff(const GridDomain& domain, int n, BoundaryCondition bc, std::uint64_t seed) {
  GridField f = make_grid_field(domain, n, bc);
  f.seed_ = seed;
  if (bc == BoundaryCondition::Dirichlet) {
    f.values_ = sample_dirichlet_box(n, f.hx_, f.hy_, seed);
    if (std::holds_alternative<UnitDisc>(domain)) restrict_to_disc(f);
  } else {
    f.values_ = sample_neumann_box(n, f.hx_, f.hy_, seed);
  }
  return f;
}

bool GridField::contains(Complex z) const {
  return z.real() >= x_min_ && z.real() <= x_max_ && z.imag() >= y_min_ && z.imag() <= y_max_;
}

bool GridField::interior_node(int i, int j) const {
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return false;
  if (std::holds_alternative<UnitDisc>(domain_)) return std::abs(node(i, j)) < 1.0;
  if (bc_ == BoundaryCondition::Dirichlet) return i > 0 && j > 0 && i < nx_ - 1 && j < ny_ - 1;
  return true;
}

double GridField::interpolate(Complex z) const {
  const double fx = std::clamp((z.real() - x0_) / hx_, 0.0, static_cast<double>(nx_ - 1));
  const double fy = std::clamp((z.imag() - y0_) / hy_, 0.0, static_cast<double>(ny_ - 1));
  const int i = std::min(static_cast<int>(fx), nx_ - 2);
  const int j = std::min(static_cast<int>(fy), ny_ - 2);
  const double tx = fx - i;
  const double ty = fy - j;
  return (1.0 - ty) * ((1.0 - tx) * at(i, j) + tx * at(i + 1, j)) +
         ty * ((1.0 - tx) * at(i, j + 1) + tx * at(i + 1, j + 1));
}

GridField GridField::shifted(double lambda) const {
  GridField out = *this;
  for (double& v : out.values_) v += lambda;
  return out;
}

GridField reflection_symmetrized(const GridField& field) {
  if (!std::holds_alternative<HalfPlaneBox>(field.domain())) {
    throw ConfigError("reflection symmetrization needs a half-plane box");
  }
  GridField out = field;
  for (int j = 0; j < field.ny(); ++j) {
    for (int i = 0; i < field.nx(); ++i) {
      out.at(i, j) = 0.5 * (field.at(i, j) + field.at(field.nx() - 1 - i, j));
    }
  }
  return out;
}

int circle_points(double epsilon, double spacing) {
  return std::max(64, static_cast<int>(std::ceil(2.0 * kPi * epsilon / spacing)));
}

double circle_average(const GridField& field, Complex z, double epsilon) {
  require_epsilon(epsilon, field.spacing());
  require_circle_inside(field, z, epsilon);
  const int k = circle_points(epsilon, field.spacing());
  double sum = 0.0;
  for (int q = 0; q < k; ++q) {
    sum += field.interpolate(z + std::polar(epsilon, 2.0 * kPi * q / k));
  }
  return sum / k;
}

double semicircle_average(const FieldView& field, double x, double epsilon, double spacing) {
  const int k = circle_points(epsilon, spacing) / 2;
  double sum = 0.0;
  for (int q = 0; q < k; ++q) {
    sum += field(Complex(x, 0.0) + std::polar(epsilon, kPi * (q + 0.5) / k));
  }
  return sum / k;
}

MomentFit moment_test(const std::vector<std::vector<double>>& averages, double gamma,
                      const std::vector<double>& epsilons) {
  const std::size_t m = epsilons.size();
  if (m < 3) throw ConfigError("moment_test needs at least three epsilon values");
  if (averages.size() < 1000) throw ConfigError("moment_test needs an ensemble of at least 1000 fields");
  const auto n = static_cast<double>(averages.size());

  std::vector<double> mean(m, 0.0);
  for (const auto& row : averages) {
    if (row.size() != m) throw ConfigError("ragged circle-average table");
    for (std::size_t j = 0; j < m; ++j) mean[j] += std::exp(gamma * row[j]);
  }
  for (double& v : mean) v /= n;

  std::vector<double> cov(m * m, 0.0);
  for (const auto& row : averages) {
    for (std::size_t a = 0; a < m; ++a) {
      const double da = std::exp(gamma * row[a]) - mean[a];
      for (std::size_t b = 0; b < m; ++b) cov[a * m + b] += da * (std::exp(gamma * row[b]) - mean[b]);
    }
  }
  for (double& v : cov) v /= (n - 1.0);

  std::vector<double> x(m);
  double x_bar = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    x[j] = std::log(1.0 / epsilons[j]);
    x_bar += x[j] / static_cast<double>(m);
  }
  double sxx = 0.0;
  for (const double v : x) sxx += (v - x_bar) * (v - x_bar);
  if (sxx <= 0.0) throw ConfigError("moment_test needs distinct epsilon values");

  MomentFit fit;
  fit.epsilons = epsilons;
  std::vector<double> w(m);
  for (std::size_t j = 0; j < m; ++j) {
    w[j] = (x[j] - x_bar) / sxx;
    fit.log_moments.push_back(std::log(mean[j]));
    fit.slope += w[j] * fit.log_moments.back();
  }
  double var = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) var += w[a] * w[b] * cov[a * m + b] / (mean[a] * mean[b]);
  }
  fit.stderr_slope = std::sqrt(std::max(0.0, var) / n);
  return fit;
}

double QuantumMeasure::total() const {
  double s = 0.0;
  for (const double v : cell_mass) s += v;
  return s;
}

QuantumMeasure quantum_area(const GridField& field, double gamma, double epsilon) {
  if (!(gamma >= 0.0 && gamma < 2.0)) throw DomainError("quantum area requires 0 <= gamma < 2");
  require_epsilon(epsilon, field.spacing());
  QuantumMeasure out;
  out.epsilon = epsilon;
  out.gamma = gamma;
  out.cell_area = field.hx() * field.hy();
  const double norm = std::pow(epsilon, gamma * gamma / 2.0);
  const bool disc = std::holds_alternative<UnitDisc>(field.domain());
  const bool cell_centred = field.bc() == BoundaryCondition::NeumannMeanZero;
  const int cells_x = cell_centred ? field.nx() : field.nx() - 1;
  const int cells_y = cell_centred ? field.ny() : field.ny() - 1;
  const Complex offset = cell_centred ? Complex(0.0, 0.0) : Complex(0.5 * field.hx(), 0.5 * field.hy());
  for (int j = 0; j < cells_y; ++j) {
    for (int i = 0; i < cells_x; ++i) {
      const Complex c = field.node(i, j) + offset;
      if (disc && std::abs(c) >= 1.0) continue;
      if (cell_centred && (c.real() - epsilon < field.x_min() || c.real() + epsilon > field.x_max() ||
                           c.imag() - epsilon < field.y_min() || c.imag() + epsilon > field.y_max())) {
        continue;
      }
      out.centres.push_back(c);
      out.cell_mass.push_back(norm * std::exp(gamma * circle_average(field, c, epsilon)) * out.cell_area);
    }
  }
  return out;
}

double boundary_quantum_length(const FieldView& field, double spacing, double origin, double gamma,
                               double x_lo, double x_hi, double epsilon) {
  if (!(x_lo <= x_hi)) throw DomainError("boundary interval must satisfy x_lo <= x_hi");
  if (!(spacing > 0.0)) throw DomainError("quadrature spacing must be positive");
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  if (x_lo == x_hi) return 0.0;
  const double norm = std::pow(epsilon, gamma * gamma / 4.0);
  auto density = [&](double x) {
    if (gamma == 0.0) return 1.0;
    return norm * std::exp(0.5 * gamma * semicircle_average(field, x, epsilon, spacing));
  };

  const auto i_lo = static_cast<long>(std::floor((x_lo - origin) / spacing));
  const auto i_hi = static_cast<long>(std::ceil((x_hi - origin) / spacing));
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(i_hi - i_lo + 1));
  for (long i = i_lo; i <= i_hi; ++i) f.push_back(density(origin + static_cast<double>(i) * spacing));

  double total = 0.0;
  for (long i = i_lo; i < std::max(i_hi, i_lo + 1); ++i) {
    const double xa = origin + static_cast<double>(i) * spacing;
    const double fa = f[static_cast<std::size_t>(i - i_lo)];
    const double fb = f[std::min(static_cast<std::size_t>(i - i_lo + 1), f.size() - 1)];
    const double a = std::max(x_lo, xa);
    const double b = std::min(x_hi, xa + spacing);
    if (b <= a) continue;
    const double slope = (fb - fa) / spacing;
    const double va = fa + slope * (a - xa);
    const double vb = fa + slope * (b - xa);
    total += 0.5 * (b - a) * (va + vb);
  }
  return total;
}

double boundary_quantum_length(const GridField& field, double gamma, double x_lo, double x_hi,
                               double epsilon) {
  if (field.bc() != BoundaryCondition::NeumannMeanZero) {
    throw ConfigError("boundary quantum length needs a free-boundary (Neumann) field");
  }
  if (!std::holds_alternative<HalfPlaneBox>(field.domain())) {
    throw ConfigError("boundary quantum length needs a half-plane box");
  }
  require_epsilon(epsilon, field.spacing());
  const double reach = epsilon + field.hx();
  if (x_lo - reach < field.x_min() || x_hi + reach > field.x_max() || epsilon > field.y_max()) {
    throw GeometryError("boundary interval too close to the box edge");
  }
  const FieldView view = [&field](Complex z) { return field.interpolate(z); };
  return boundary_quantum_length(view, field.hx(), field.node(0, 0).real(), gamma, x_lo, x_hi, epsilon);
}

nlohmann::json field_header(const GridField& field) {
  nlohmann::json domain;
  if (std::holds_alternative<UnitDisc>(field.domain())) {
    domain = {{"kind", "unit_disc"}};
  } else {
    const auto box = std::get<HalfPlaneBox>(field.domain());
    domain = {{"kind", "half_plane_box"}, {"half_width", box.half_width}, {"height", box.height}};
  }
  return {{"domain", domain},     {"n", field.n()},   {"bc", to_string(field.bc())},
          {"seed", field.seed()}, {"nx", field.nx()}, {"ny", field.ny()},
          {"layout", "row-major float64, row index = y"}};
}

void write_field(std::ostream& binary, const GridField& field) {
  binary.write(reinterpret_cast<const char*>(field.values().data()),
               static_cast<std::streamsize>(field.values().size() * sizeof(double)));
}

void write_measure_csv(std::ostream& out, const QuantumMeasure& measure) {
  out << "cell,x,y,mass\n";
  out.precision(17);
  for (std::size_t c = 0; c < measure.cell_mass.size(); ++c) {
    out << c << ',' << measure.centres[c].real() << ',' << measure.centres[c].imag() << ','
        << measure.cell_mass[c] << '\n';
  }
}

}  // namespace slelqg
