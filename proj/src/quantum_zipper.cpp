#include "slelqg/quantum_zipper.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "slelqg/analytic_core.hpp"
#include "slelqg/errors.hpp"
#include "slelqg/martingale_lab.hpp"
#include "slelqg/parallel.hpp"
#include "slelqg/rng.hpp"

namespace slelqg {

CoupledField::CoupledField(DriverPath driver, double t, GridField base)
    : driver_(std::move(driver)), t_(t), steps_(driver_.steps_for(t)), base_(std::move(base)) {
  if (base_.bc() != BoundaryCondition::NeumannMeanZero ||
      !std::holds_alternative<HalfPlaneBox>(base_.domain())) {
    throw ConfigError("the coupled field needs a free-boundary field on a half-plane box");
  }
  if (!(driver_.kappa > 0.0)) throw ConfigError("the coupled field needs kappa > 0");
}

double CoupledField::martingale(Complex z) const {
  return mart_h(reverse_map(driver_, z, steps_), driver_.kappa);
}

double CoupledField::pulled_back(Complex z) const {
  const Complex w = reverse_map(driver_, z, steps_).w;
  if (!base_.contains(w)) throw GeometryError("f_t(z) lies outside the base field box");
  return base_.interpolate(w);
}

double CoupledField::eval(Complex z) const {
  const FlowState s = reverse_map(driver_, z, steps_);
  if (!base_.contains(s.w)) throw GeometryError("f_t(z) lies outside the base field box");
  return base_.interpolate(s.w) + mart_h(s, driver_.kappa);
}

FieldView CoupledField::view() const {
  return [this](Complex z) { return eval(z); };
}

CoupledField couple_field(DriverPath driver, double t, GridField base) {
  return CoupledField(std::move(driver), t, std::move(base));
}

WeldingLengths welding_length_test(const CoupledField& coupled, double x, double epsilon,
                                   std::optional<double> gamma, std::optional<double> spacing) {
  const double kappa = coupled.kappa();
  if (!gamma) {
    if (!(kappa > 0.0 && kappa < 4.0)) throw ConfigError("welding lengths are compared for kappa in (0, 4)");
    gamma = std::min(std::sqrt(kappa), 4.0 / std::sqrt(kappa));
  }
  const double h = spacing.value_or(coupled.base().hx());
  if (epsilon < 2.0 * h * (1.0 - 1e-12)) throw DomainError("epsilon must be at least two quadrature spacings");

  const WeldedPartner partner = find_welded_partner(coupled.driver(), coupled.t(), x);
  const FieldView view = coupled.view();
  WeldingLengths out;
  out.x = x;
  out.x_prime = partner.x_prime;
  out.epsilon = epsilon;
  out.len_right = boundary_quantum_length(view, h, 0.0, *gamma, 0.0, x, epsilon);
  out.len_left = boundary_quantum_length(view, h, 0.0, *gamma, partner.x_prime, 0.0, epsilon);
  const double mid = 0.5 * (out.len_right + out.len_left);
  out.rel_diff = mid > 0.0 ? std::abs(out.len_right - out.len_left) / mid : 0.0;
  return out;
}

bool WeldingTrend::monotone_decreasing() const {
  for (std::size_t j = 1; j < median_rel_diff.size(); ++j) {
    if (!(median_rel_diff[j] < median_rel_diff[j - 1])) return false;
  }
  return !median_rel_diff.empty();
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  return 0.5 * (upper + *std::max_element(v.begin(), mid));
}

}  // namespace

WeldingTrend welding_trend(const WeldingTrendConfig& c) {
  if (c.epsilons.empty()) throw ConfigError("welding trend needs at least one epsilon");
  WeldingTrend trend;
  trend.members = parallel_map<WeldingMemberResult>(c.members, c.workers, [&](std::size_t i) {
    WeldingMemberResult r;
    r.member = i;
    const DriverPath driver = sample_driver(c.kappa, c.t, c.dt, rng::derive_seed(c.master_seed, "welding_driver", i));
    const GridField base = sample_gff(c.box, c.grid_n, BoundaryCondition::NeumannMeanZero,
                                      rng::derive_seed(c.master_seed, "welding_field", i));
    try {
      const WeldingWindow window = welding_window(driver, c.t);
      const CoupledField coupled(driver, c.t, base);
      // The discrete weld pairs u with -u at a zip step only when both lie on
      // opposite sides of the slit base, so try nearby x before giving up.
      std::optional<double> x;
      for (const double shift : {0.0, -0.05, 0.05, -0.1, 0.1, -0.15, 0.15, -0.2, 0.2}) {
        const double candidate = (c.window_fraction + shift) * window.right;
        if (candidate <= 0.0) continue;
        try {
          find_welded_partner(driver, c.t, candidate);
          x = candidate;
          break;
        } catch (const NoPartnerError&) {
        }
      }
      if (!x) throw NoPartnerError("no welded partner near the requested point");
      for (const double eps : c.epsilons) r.per_epsilon.push_back(welding_length_test(coupled, *x, eps, c.gamma));
      r.ok = true;
    } catch (const GeometryError&) {
      r.per_epsilon.clear();
    } catch (const NoPartnerError&) {
      r.per_epsilon.clear();
    }
    return r;
  });
  for (std::size_t j = 0; j < c.epsilons.size(); ++j) {
    std::vector<double> diffs;
    for (const auto& m : trend.members) {
      if (m.ok) diffs.push_back(m.per_epsilon[j].rel_diff);
    }
    trend.median_rel_diff.push_back(median(std::move(diffs)));
  }
  trend.skipped = static_cast<std::uint64_t>(
      std::count_if(trend.members.begin(), trend.members.end(), [](const auto& m) { return !m.ok; }));
  return trend;
}

void write_welding_csv(std::ostream& out, const WeldingTrend& trend, double t) {
  out << "member_index,t,x,x_prime,epsilon,len_right,len_left,rel_diff\n";
  out.precision(17);
  for (const auto& m : trend.members) {
    for (const auto& w : m.per_epsilon) {
      out << m.member << ',' << t << ',' << w.x << ',' << w.x_prime << ',' << w.epsilon << ','
          << w.len_right << ',' << w.len_left << ',' << w.rel_diff << '\n';
    }
  }
}

CovarianceCheck covariance_transform_check(const Rect& domain, const DriverPath& driver, double t,
                                           double kappa, int m) {
  constexpr double kMargin = 0.1;
  if (m < 2) throw ConfigError("quadrature needs m >= 2");
  if (!(domain.x1 > domain.x0 && domain.y1 > domain.y0)) throw GeometryError("empty rectangle");
  if (domain.y0 < kMargin) throw GeometryError("rectangle must stay 0.1 above the real axis");

  const std::size_t steps = driver.steps_for(t);
  DriverPath head = driver;
  head.increments.resize(steps);
  const DriverPath inverse = reversed(head);
  const double d = 1.0 + kappa / 8.0;
  const double hx = (domain.x1 - domain.x0) / m;
  const double hy = (domain.y1 - domain.y0) / m;
  const int side = m + 1;

  std::vector<Complex> image(static_cast<std::size_t>(side) * side);
  std::vector<double> density_w(image.size());
  double lhs = 0.0;
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      const Complex z(domain.x0 + i * hx, domain.y0 + j * hy);
      const FlowState s = reverse_map(driver, z, steps);
      if (!(s.w.imag() > 0.0)) throw GeometryError("rectangle touches the slit");
      const double weight = (i == 0 || i == m ? 0.5 : 1.0) * (j == 0 || j == m ? 0.5 : 1.0);
      lhs += weight * std::pow(std::abs(s.dw), d) * natural_param_density(HalfPlanePoint(z), kappa);

      const std::size_t idx = static_cast<std::size_t>(j) * side + i;
      image[idx] = s.w;
      const FlowState back = forward_map(inverse, s.w, steps);
      if (!back.alive) throw GeometryError("image point swallowed by the inverse flow");
      density_w[idx] = natural_param_density(HalfPlanePoint(back.w), kappa) * std::pow(std::abs(back.dw), 2.0 - d);
    }
  }
  lhs *= hx * hy;

  double rhs = 0.0;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      const std::size_t a = static_cast<std::size_t>(j) * side + i;
      const std::size_t b = a + 1;
      const std::size_t c = a + side + 1;
      const std::size_t e = a + side;
      const Complex p = image[a], q = image[b], r = image[c], s = image[e];
      // Shoelace area of the image quadrilateral.
      const double area = 0.5 * std::abs((p.real() * q.imag() - q.real() * p.imag()) +
                                         (q.real() * r.imag() - r.real() * q.imag()) +
                                         (r.real() * s.imag() - s.real() * r.imag()) +
                                         (s.real() * p.imag() - p.real() * s.imag()));
      rhs += area * 0.25 * (density_w[a] + density_w[b] + density_w[c] + density_w[e]);
    }
  }

  CovarianceCheck out;
  out.m = m;
  out.lhs = lhs;
  out.rhs = rhs;
  out.rel_err = std::abs(lhs - rhs) / std::abs(lhs);
  return out;
}

nlohmann::json to_json(const CovarianceCheck& check) {
  return {{"m", check.m}, {"lhs", check.lhs}, {"rhs", check.rhs}, {"rel_err", check.rel_err}};
}

}  // namespace slelqg
