#pragma once

// Coupling of a free-boundary field with the reverse Loewner flow, the
// conformal-welding length experiment, and the change-of-variables check of
// the natural-parametrization measure under zipping.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "json.hpp"
#include "slelqg/gff.hpp"
#include "slelqg/loewner.hpp"

namespace slelqg {

/// h(z) = h~(f_t(z)) + h_t(z): the base field pulled back through f_t plus
/// the reverse-flow martingale.
class CoupledField {
 public:
  CoupledField(DriverPath driver, double t, GridField base);

  const DriverPath& driver() const { return driver_; }
  double t() const { return t_; }
  double kappa() const { return driver_.kappa; }
  std::size_t steps() const { return steps_; }
  const GridField& base() const { return base_; }

  /// Full field value. Throws GeometryError when f_t(z) leaves the base box.
  double eval(Complex z) const;
  /// Deterministic part h_t(z).
  double martingale(Complex z) const;
  /// Random part h~(f_t(z)).
  double pulled_back(Complex z) const;

  FieldView view() const;

 private:
  DriverPath driver_;
  double t_;
  std::size_t steps_;
  GridField base_;
};

/// Requires a Neumann base field and t within the driver horizon.
CoupledField couple_field(DriverPath driver, double t, GridField base);

struct WeldingLengths {
  double x = 0.0;
  double x_prime = 0.0;
  double epsilon = 0.0;
  double len_right = 0.0;  // quantum length of [0, x]
  double len_left = 0.0;   // quantum length of [x', 0]
  /// |len_right - len_left| / ((len_right + len_left) / 2)
  double rel_diff = 0.0;
};

/// Quantum boundary lengths of the two segments welded together by f_t.
/// gamma defaults to min(sqrt(kappa), 4/sqrt(kappa)); kappa must be in (0, 4)
/// unless gamma is given explicitly. Quadrature lattice: multiples of
/// `spacing` (default: the base lattice spacing).
WeldingLengths welding_length_test(const CoupledField& coupled, double x, double epsilon,
                                   std::optional<double> gamma = std::nullopt,
                                   std::optional<double> spacing = std::nullopt);

struct WeldingTrendConfig {
  double kappa = 2.0;
  double t = 0.25;
  double dt = 1e-3;
  std::vector<double> epsilons{0.08, 0.04, 0.02};
  std::uint64_t members = 500;
  int grid_n = 1024;
  HalfPlaneBox box{3.0, 6.0};
  /// x = window_fraction * right edge of the welding window.
  double window_fraction = 0.5;
  std::optional<double> gamma;
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
};

struct WeldingMemberResult {
  std::uint64_t member = 0;
  bool ok = false;
  std::vector<WeldingLengths> per_epsilon;
};

struct WeldingTrend {
  std::vector<WeldingMemberResult> members;
  /// Median rel_diff per epsilon over members that completed.
  std::vector<double> median_rel_diff;
  std::uint64_t skipped = 0;
  bool monotone_decreasing() const;
};

WeldingTrend welding_trend(const WeldingTrendConfig& config);

void write_welding_csv(std::ostream& out, const WeldingTrend& trend, double t);

/// Axis-aligned rectangle [x0, x1] x [y0, y1] in the upper half-plane.
struct Rect {
  double x0 = 1.0;
  double x1 = 2.0;
  double y0 = 1.0;
  double y1 = 2.0;
};

struct CovarianceCheck {
  int m = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_err = 0.0;
};

/// lhs: tensor trapezoid of |f_t'(z)|^d G(z) over D on an (m+1)^2 node grid.
/// rhs: integral of N_t(w) = G(g(w)) |g'(w)|^{2-d} over f_t(D), where g is the
/// forward flow under the reversed driver (the inverse map), using the
/// pushed-forward grid cells as quadrilaterals with corner-averaged density.
CovarianceCheck covariance_transform_check(const Rect& domain, const DriverPath& driver, double t,
                                           double kappa, int m);

nlohmann::json to_json(const CovarianceCheck& check);

}  // namespace slelqg
