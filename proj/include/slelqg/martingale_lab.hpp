#pragma once

// Martingales of the reverse and forward Loewner flows, the pathwise
// quadratic-variation identities, and Monte-Carlo expectation checks.

#include <cstdint>
#include <optional>
#include <string>

#include "slelqg/loewner.hpp"

namespace slelqg {

/// Streaming count / mean / sum of squared deviations (Welford), mergeable
/// with Chan's pairwise update. Merging in a fixed order is bit-reproducible.
class McAccumulator {
 public:
  void add(double x);
  void merge(const McAccumulator& other);

  std::uint64_t count() const { return count_; }
  double mean() const { return mean_; }
  double m2() const { return m2_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const;
  /// sqrt(m2 / (count (count - 1))).
  double standard_error() const;

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// h_t(z) = (2/sqrt(kappa)) log|f_t(z)| + Q log|f_t'(z)|.
double mart_h(const FlowState& state, double kappa);

/// C_t(z) = -log(Im f_t(z) |f_t'(z)|).
double conformal_factor_C(const FlowState& state);

struct ExpMartingaleForms {
  /// exp(alpha h_t + (alpha^2/2) C_t)
  double exponential = 0.0;
  /// |w|^{2 alpha/sqrt(kappa)} |f'|^{alpha Q - alpha^2/2} (Im w)^{-alpha^2/2}
  double product = 0.0;
};

ExpMartingaleForms exp_martingale_forms(const FlowState& state, double alpha, double kappa);

inline constexpr double kDualFormTolerance = 1e-10;

/// Bulk exponential martingale in product form, after checking it against the
/// exponential form (ConsistencyFault beyond kDualFormTolerance).
double exp_martingale_bulk(const FlowState& state, double alpha, double kappa);

/// Boundary exponential martingale u^{2 beta/sqrt(kappa)} f'(x)^{beta Q - beta^2}
/// for a real point right of the welding window, cross-checked against
/// exp(beta h_t) f'^{-beta^2}.
double exp_martingale_boundary(const FlowState& state, double beta, double kappa);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_err = 0.0;
};

/// sum R_s(z)^2 ds against C_0(z) - C_t(z).
IdentityCheck pathwise_qv_check(const FlowTrajectory& traj);

/// sum R_s(y) R_s(z) ds against G_0(y, z) - G_0(f_t(y), f_t(z)); y is the
/// trajectory's tracked pair.
IdentityCheck pathwise_covariation_check(const FlowTrajectory& traj);

/// M_t = G(g_t(z)) |g_t'(z)|^{2 - d}, d = 1 + kappa/8.
double forward_length_martingale(const FlowState& state, double kappa);

/// (g_t(x) / g_t'(x))^{d_boundary - 1} for kappa in (4, 8).
double forward_boundary_martingale(const FlowState& state, double kappa);

enum class MartingaleQuantity {
  ReverseH,           // h_t(z)
  ReverseExpBulk,     // M^alpha_t(z)
  ReverseExpBoundary, // M^beta_t(x)
  ForwardLength,      // M_t(z)
  ForwardBoundary,    // hat M_t(x)
};

struct MartingaleExperiment {
  std::string name = "mc";
  MartingaleQuantity quantity = MartingaleQuantity::ReverseH;
  Complex z{0.0, 2.0};
  double kappa = 2.0;
  /// alpha for bulk exponentials, beta for boundary exponentials.
  double exponent = 0.0;
  double T = 0.5;
  double dt = 1e-3;
  std::uint64_t n_paths = 10000;
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
};

struct McResult {
  double mean = 0.0;
  double stderr_mean = 0.0;
  double target = 0.0;
  double z_score = 0.0;
  std::uint64_t n_paths = 0;
  /// Paths dropped because the tracked point was swallowed (forward flow) or
  /// zipped onto the slit (reverse boundary quantities).
  std::uint64_t excluded = 0;
  double exclusion_rate() const;
};

/// Closed-form time-zero value of the experiment's quantity.
double martingale_target(const MartingaleExperiment& experiment);

/// Runs n_paths independent drivers with seeds derive_seed(master_seed, name,
/// index) and compares the sample mean at time T with the time-zero value.
McResult mc_expectation(const MartingaleExperiment& experiment);

/// Richardson-style refinement test of a pathwise identity: mean |error| over
/// paths at dt and at dt/2 on the same Brownian paths.
struct OrderTest {
  double mean_err_coarse = 0.0;
  double mean_err_fine = 0.0;
  double ratio = 0.0;
};

struct OrderExperiment {
  std::string name = "qv_check";
  double kappa = 2.0;
  Complex z{1.0, 1.0};
  /// When set, the off-diagonal (covariation) identity is tested for (y, z).
  std::optional<Complex> y;
  double T = 0.5;
  double dt = 1e-4;
  std::uint64_t n_paths = 100;
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
};

OrderTest identity_order_test(const OrderExperiment& experiment);

}  // namespace slelqg
