#pragma once

// Gaussian free fields on lattices, circle averages, and regularized
// quantum area and boundary length measures.
//
// Normalization: the field has covariance 2*pi*(-Laplacian)^{-1}, so the
// continuum covariance is the Green function with -Laplacian G = 2 pi delta
// (G ~ -log|y - z| at short range).

#include <algorithm>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace slelqg {

using Complex = std::complex<double>;

enum class BoundaryCondition { Dirichlet, NeumannMeanZero };

/// Unit disc, embedded in the node lattice of [-1, 1]^2; the field vanishes
/// on and outside the unit circle.
struct UnitDisc {};

/// Box [-half_width, half_width] x [0, height] standing in for the upper
/// half-plane. Neumann fields use a cell-centred lattice.
struct HalfPlaneBox {
  double half_width = 2.0;
  double height = 4.0;
};

using GridDomain = std::variant<UnitDisc, HalfPlaneBox>;

class GridField {
 public:
  GridField() = default;

  const GridDomain& domain() const { return domain_; }
  int n() const { return n_; }
  BoundaryCondition bc() const { return bc_; }
  std::uint64_t seed() const { return seed_; }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double spacing() const { return std::max(hx_, hy_); }
  Complex node(int i, int j) const { return {x0_ + i * hx_, y0_ + j * hy_}; }

  double& at(int i, int j) { return values_[static_cast<std::size_t>(j) * nx_ + i]; }
  double at(int i, int j) const { return values_[static_cast<std::size_t>(j) * nx_ + i]; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Physical rectangle on which the field is defined.
  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  bool contains(Complex z) const;

  /// Bilinear interpolation. Coordinates past the outermost nodes are clamped:
  /// a mirror reflection on Neumann lattices and the zero extension on
  /// Dirichlet lattices, whose edge nodes vanish.
  double interpolate(Complex z) const;

  /// True at lattice nodes that belong to the domain interior.
  bool interior_node(int i, int j) const;

  /// Field plus a constant.
  GridField shifted(double lambda) const;

 private:
  friend GridField sample_gff(const GridDomain&, int, BoundaryCondition, std::uint64_t);
  friend GridField make_grid_field(const GridDomain&, int, BoundaryCondition);

  GridDomain domain_{UnitDisc{}};
  int n_ = 0;
  BoundaryCondition bc_ = BoundaryCondition::Dirichlet;
  std::uint64_t seed_ = 0;
  int nx_ = 0;
  int ny_ = 0;
  double x0_ = 0.0;
  double y0_ = 0.0;
  double hx_ = 0.0;
  double hy_ = 0.0;
  double x_min_ = 0.0;
  double x_max_ = 0.0;
  double y_min_ = 0.0;
  double y_max_ = 0.0;
  std::vector<double> values_;
};

/// Zero field on the lattice a sample would use; useful for deterministic
/// fields in tests and for symmetrized copies.
GridField make_grid_field(const GridDomain& domain, int n, BoundaryCondition bc);

/// Spectral sample: h = sum_k xi_k sqrt(2 pi / lambda_k) phi_k over the
/// discrete Laplacian eigenbasis (sines for Dirichlet, cosines without the
/// constant mode for Neumann). The disc field is the square Dirichlet field
/// minus the discrete harmonic extension of its values off the disc.
/// Supported: UnitDisc + Dirichlet, HalfPlaneBox + either bc.
GridField sample_gff(const GridDomain& domain, int n, BoundaryCondition bc, std::uint64_t seed);

/// Copy of a box field averaged with its mirror image under x -> -x.
GridField reflection_symmetrized(const GridField& field);

using FieldView = std::function<double(Complex)>;

/// Number of quadrature points on a full circle of radius epsilon.
int circle_points(double epsilon, double spacing);

/// Mean over K equally spaced points on the circle |w - z| = epsilon.
/// Requires epsilon >= 2 lattice spacings. Neumann fields also require the
/// circle inside the box (GeometryError otherwise); Dirichlet fields extend
/// by zero.
double circle_average(const GridField& field, Complex z, double epsilon);

/// Mean over the upper semicircle of radius epsilon about a real point.
double semicircle_average(const FieldView& field, double x, double epsilon, double spacing);

struct MomentFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  std::vector<double> epsilons;
  /// log of the sample mean of exp(gamma h_eps) per epsilon.
  std::vector<double> log_moments;
};

/// Fits log E exp(gamma h_eps) against log(1/eps). `averages[f][j]` is the
/// circle average of field f at epsilons[j]. The slope standard error uses the
/// delta method with the sample covariance across epsilons.
MomentFit moment_test(const std::vector<std::vector<double>>& averages, double gamma,
                      const std::vector<double>& epsilons);

struct QuantumMeasure {
  double epsilon = 0.0;
  double gamma = 0.0;
  double cell_area = 0.0;
  std::vector<Complex> centres;
  std::vector<double> cell_mass;
  double total() const;
};

/// Per-cell mass eps^{gamma^2/2} exp(gamma h_eps(centre)) * cell_area over
/// lattice cells whose centre lies in the domain. Throws DomainError unless
/// 0 <= gamma < 2.
QuantumMeasure quantum_area(const GridField& field, double gamma, double epsilon);

/// Integral over [x_lo, x_hi] of eps^{gamma^2/4} exp((gamma/2) h_eps^semi(x)).
/// The integrand is sampled on the lattice x_i = origin + i*spacing and
/// integrated as its piecewise-linear interpolant, which makes the result
/// additive over adjacent intervals.
double boundary_quantum_length(const FieldView& field, double spacing, double origin, double gamma,
                               double x_lo, double x_hi, double epsilon);

/// Grid-field form; requires a Neumann field and an interval on the bottom edge.
double boundary_quantum_length(const GridField& field, double gamma, double x_lo, double x_hi,
                               double epsilon);

/// Raw row-major doubles plus a JSON header {domain, n, bc, seed, nx, ny}.
nlohmann::json field_header(const GridField& field);
void write_field(std::ostream& binary, const GridField& field);
void write_measure_csv(std::ostream& out, const QuantumMeasure& measure);

std::string to_string(BoundaryCondition bc);

}  // namespace slelqg
