#include "slelqg/analytic_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slelqg/errors.hpp"

namespace slelqg {

namespace {

void require_kappa(double kappa) {
  if (!std::isfinite(kappa) || kappa <= 0.0) {
    throw DomainError("kappa must be positive and finite, got " + std::to_string(kappa));
  }
}

void require_interior(HalfPlanePoint z, const char* what) {
  if (!z.interior()) {
    throw SingularityError(std::string(what) + ": point must lie strictly inside the upper half-plane");
  }
}

double sin_arg(HalfPlanePoint z) { return z.im() / std::abs(z.z()); }

}  // namespace

HalfPlanePoint::HalfPlanePoint(double re, double im) : re_(re), im_(im) {
  if (!std::isfinite(re) || !std::isfinite(im)) {
    throw DomainError("half-plane point must be finite");
  }
  if (im < 0.0) {
    throw DomainError("half-plane point must have Im >= 0");
  }
}

double background_charge_from_gamma(double gamma) {
  if (!std::isfinite(gamma) || gamma <= 0.0) throw DomainError("gamma must be positive and finite");
  return gamma / 2.0 + 2.0 / gamma;
}

double background_charge_from_kappa(double kappa) {
  require_kappa(kappa);
  const double s = std::sqrt(kappa);
  return s / 2.0 + 2.0 / s;
}

LqgParams build_params(double kappa) {
  require_kappa(kappa);
  const double s = std::sqrt(kappa);
  LqgParams p;
  p.kappa = kappa;
  p.gamma = std::min(s, 4.0 / s);
  p.gamma_dual = std::max(s, 4.0 / s);
  p.Q = background_charge_from_kappa(kappa);
  p.alpha_bulk = s / 2.0;
  p.beta_boundary = s / 2.0 - 2.0 / s;
  p.d_bulk = 1.0 + kappa / 8.0;
  if (kappa > 4.0 && kappa < 8.0) {
    p.d_boundary = 2.0 - 8.0 / kappa;
  }
  return p;
}

double kpz_bulk(double delta, double gamma) {
  if (!(gamma > 0.0 && gamma < 2.0)) {
    throw DomainError("kpz_bulk requires gamma in (0, 2)");
  }
  const double g = gamma * gamma / 4.0;
  return g * delta * delta + (1.0 - g) * delta;
}

double kpz_bulk_inverse(double x, double gamma) {
  if (!(gamma > 0.0 && gamma < 2.0)) {
    throw DomainError("kpz_bulk_inverse requires gamma in (0, 2)");
  }
  if (!(x >= 0.0)) {
    throw DomainError("kpz_bulk_inverse requires x >= 0 for a nonnegative root");
  }
  const double g = gamma * gamma / 4.0;
  const double b = 1.0 - g;
  // Rationalized root; avoids cancellation for small gamma.
  return 2.0 * x / (b + std::sqrt(b * b + 4.0 * g * x));
}

double kpz_dimension(double alpha, const LqgParams& params) {
  return alpha * params.Q - alpha * alpha / 2.0;
}

double kpz_dimension_boundary(double beta, const LqgParams& params) {
  return beta * params.Q - beta * beta;
}

bool satisfies_seiberg_bulk(double alpha, const LqgParams& params) { return alpha <= params.Q; }

bool satisfies_seiberg_boundary(double beta, const LqgParams& params) {
  return beta <= params.Q / 2.0;
}

double central_charge(double kappa) {
  require_kappa(kappa);
  const double kappa_dual = 16.0 / kappa;
  return 0.25 * (6.0 - kappa) * (6.0 - kappa_dual);
}

double neumann_green(HalfPlanePoint y, HalfPlanePoint z) {
  require_interior(y, "neumann_green");
  require_interior(z, "neumann_green");
  const double direct = std::abs(y.z() - z.z());
  if (direct == 0.0) {
    throw SingularityError("neumann_green: coincident arguments");
  }
  const double mirrored = std::abs(y.z() - std::conj(z.z()));
  return -std::log(direct * mirrored);
}

double exp_martingale_initial(HalfPlanePoint z, double alpha, double kappa) {
  require_kappa(kappa);
  require_interior(z, "exp_martingale_initial");
  const double modulus_exp = 2.0 * alpha / std::sqrt(kappa);
  return std::pow(std::abs(z.z()), modulus_exp) * std::pow(z.im(), -alpha * alpha / 2.0);
}

double natural_param_density(HalfPlanePoint z, double kappa) {
  require_kappa(kappa);
  require_interior(z, "natural_param_density");
  const double a = 1.0 - 8.0 / kappa;
  const double b = 8.0 / kappa + kappa / 8.0 - 2.0;
  return std::pow(std::abs(z.z()), a) * std::pow(z.im(), b);
}

double expected_bulk_length_density(HalfPlanePoint z, double kappa) {
  require_kappa(kappa);
  require_interior(z, "expected_bulk_length_density");
  return std::pow(sin_arg(z), 8.0 / kappa - 2.0);
}

BoundaryDensities expected_boundary_densities(double x, double kappa) {
  require_kappa(kappa);
  if (!std::isfinite(x) || x <= 0.0) {
    throw DomainError("expected_boundary_densities requires a positive argument");
  }
  BoundaryDensities out;
  if (kappa > 4.0 && kappa < 8.0) {
    out.intersection_density = std::pow(x, 2.0 - 12.0 / kappa);
  }
  out.boundary_length_density = kappa <= 4.0 ? x : std::pow(x, 4.0 / kappa);
  return out;
}

double expected_area_density(HalfPlanePoint w, double kappa) {
  require_kappa(kappa);
  require_interior(w, "expected_area_density");
  const double s = sin_arg(w);
  if (kappa <= 4.0) {
    return std::pow(std::abs(w.z()), 2.0 - kappa / 2.0) * std::pow(s, -kappa / 2.0);
  }
  return std::pow(s, -8.0 / kappa);
}

}  // namespace slelqg
