#pragma once

// Closed-form exponents, charges, Green functions and expected densities of
// SLE coupled to Liouville quantum gravity. Every function here is pure.

#include <complex>
#include <optional>

namespace slelqg {

using Complex = std::complex<double>;

/// Exponent bundle for a given SLE parameter kappa.
///
/// gamma is the subcritical LQG coupling min(sqrt(kappa), 4/sqrt(kappa)) and
/// gamma_dual = 4/gamma. alpha_bulk and beta_boundary are the bulk and boundary
/// exponents that make the KPZ relation reproduce the SLE dimensions
/// d_bulk = 1 + kappa/8 and d_boundary = 2 - 8/kappa. d_boundary is only
/// defined for kappa in (4, 8).
struct LqgParams {
  double kappa = 0.0;
  double gamma = 0.0;
  double gamma_dual = 0.0;
  double Q = 0.0;
  double alpha_bulk = 0.0;
  double beta_boundary = 0.0;
  double d_bulk = 0.0;
  std::optional<double> d_boundary;
};

/// A point of the closed upper half-plane.
class HalfPlanePoint {
 public:
  /// Throws DomainError when im < 0 or a coordinate is not finite.
  HalfPlanePoint(double re, double im);
  explicit HalfPlanePoint(Complex z) : HalfPlanePoint(z.real(), z.imag()) {}

  double re() const { return re_; }
  double im() const { return im_; }
  Complex z() const { return {re_, im_}; }
  bool interior() const { return im_ > 0.0; }

 private:
  double re_;
  double im_;
};

LqgParams build_params(double kappa);

/// Q = gamma/2 + 2/gamma.
double background_charge_from_gamma(double gamma);
/// Q = sqrt(kappa)/2 + 2/sqrt(kappa).
double background_charge_from_kappa(double kappa);

/// Euclidean weight x = (gamma^2/4) Delta^2 + (1 - gamma^2/4) Delta.
double kpz_bulk(double delta, double gamma);
/// Nonnegative root Delta of kpz_bulk(Delta, gamma) = x, for x >= 0.
double kpz_bulk_inverse(double x, double gamma);

/// d = alpha Q - alpha^2/2.
double kpz_dimension(double alpha, const LqgParams& params);
/// Boundary analog d = beta Q - beta^2.
double kpz_dimension_boundary(double beta, const LqgParams& params);

/// Seiberg bounds alpha <= Q (bulk) and beta <= Q/2 (boundary).
bool satisfies_seiberg_bulk(double alpha, const LqgParams& params);
bool satisfies_seiberg_boundary(double beta, const LqgParams& params);

/// c = (6 - kappa)(6 - kappa')/4 with kappa' = 16/kappa.
double central_charge(double kappa);

/// Half-plane Neumann Green function -log(|y - z| |y - conj(z)|), normalized
/// so that -Laplacian G = 2 pi delta.
double neumann_green(HalfPlanePoint y, HalfPlanePoint z);

/// Initial value of the bulk exponential martingale,
/// |z|^{2 alpha/sqrt(kappa)} (Im z)^{-alpha^2/2}.
double exp_martingale_initial(HalfPlanePoint z, double alpha, double kappa);

/// Expected natural-parametrization density G(z) = |z|^a (Im z)^b with
/// a = 1 - 8/kappa and b = 8/kappa + kappa/8 - 2.
double natural_param_density(HalfPlanePoint z, double kappa);

/// (sin arg z)^{8/kappa - 2}: expected quantum length density of the curve.
double expected_bulk_length_density(HalfPlanePoint z, double kappa);

struct BoundaryDensities {
  /// x^{2 - 12/kappa}; absent unless kappa is in (4, 8).
  std::optional<double> intersection_density;
  /// u for kappa <= 4, u^{4/kappa} for kappa > 4.
  double boundary_length_density = 0.0;
};

BoundaryDensities expected_boundary_densities(double x, double kappa);

/// Expected quantum area density at w: |w|^{2 - kappa/2} (sin phi)^{-kappa/2}
/// for kappa <= 4 and (sin phi)^{-8/kappa} for kappa >= 4.
double expected_area_density(HalfPlanePoint w, double kappa);

}  // namespace slelqg
