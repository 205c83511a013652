#pragma once

// Brownian drivers and split-step Loewner flows.
//
// Each time step composes two exactly solvable maps: the elementary slit map
// w -> sqrt(w^2 -/+ 4 dt) and a real translation by the driver increment.
// For a constant driver the composition is the exact flow, so the only
// discretization error comes from the splitting.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

namespace slelqg {

using Complex = std::complex<double>;

/// Sampled driving function on a uniform grid. increments[k] is
/// sqrt(kappa) * (B_{(k+1) dt} - B_{k dt}).
struct DriverPath {
  double kappa = 0.0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  /// Number of dyadic refinements applied by refine_driver.
  int level = 0;
  std::vector<double> increments;

  std::size_t n_steps() const { return increments.size(); }
  double horizon() const { return dt * static_cast<double>(increments.size()); }
  /// Step count for time t. Throws DomainError beyond the horizon or off-grid.
  std::size_t steps_for(double t) const;
};

DriverPath sample_driver(double kappa, double total_time, double dt, std::uint64_t seed);

/// Driver with explicitly given increments (deterministic drivers, tests).
DriverPath driver_from_increments(double kappa, double dt, std::vector<double> increments);

/// Same Brownian path at half the step: each increment is split by a
/// Brownian-bridge midpoint drawn from a stream keyed on (seed, level).
DriverPath refine_driver(const DriverPath& driver);

/// Increments in reverse order. The forward flow driven by reversed(d)
/// inverts the reverse flow driven by d.
DriverPath reversed(const DriverPath& driver);

struct FlowState {
  double t = 0.0;
  Complex w;
  Complex dw{1.0, 0.0};
  bool alive = true;
};

struct FlowTrajectory {
  double dt = 0.0;
  std::vector<FlowState> states;
  /// Running right-point sum of R_s(z)^2 ds with R = Re(2/w).
  std::vector<double> int_r2;
  /// Jointly tracked second point y and the running sum of R_s(y) R_s(z) ds.
  /// Empty unless a pair was requested.
  std::vector<FlowState> pair_states;
  std::vector<double> int_cross;

  const FlowState& final_state() const { return states.back(); }
};

/// sqrt(w^2 - 4 dt) on the branch that maps the closed half-plane into itself
/// and keeps real points outside [-2 sqrt(dt), 2 sqrt(dt)] on their side.
Complex slit_map(Complex w, double dt);
/// sqrt(w^2 + 4 dt), the inverse of slit_map.
Complex unslit_map(Complex w, double dt);

/// One reverse step: slit, then shift by -increment. Throws LifecycleError
/// when the point sits exactly on the seed.
void reverse_step(FlowState& state, double dt, double increment);
/// One forward step: shift by +increment, then unslit. Marks the state dead
/// once |w| < 2 sqrt(dt).
void forward_step(FlowState& state, double dt, double increment);

/// Reverse (zipping-up) flow of z0 for n_steps (default: the whole driver).
FlowTrajectory reverse_flow(const DriverPath& driver, Complex z0,
                            std::optional<Complex> track_pair = std::nullopt,
                            std::optional<std::size_t> n_steps = std::nullopt);

/// Final reverse-flow state only, without recording the trajectory.
FlowState reverse_map(const DriverPath& driver, Complex z0, std::size_t n_steps);

/// Forward (zipping-down) flow. The trajectory stops at the step where the
/// point is swallowed; that last state has alive == false.
FlowTrajectory forward_flow(const DriverPath& driver, Complex z0,
                            std::optional<std::size_t> n_steps = std::nullopt);

FlowState forward_map(const DriverPath& driver, Complex z0, std::size_t n_steps);

inline constexpr double kWeldTolerance = 1e-9;
inline constexpr int kWeldMaxIterations = 200;

struct WeldedPartner {
  double x_prime = 0.0;
  /// Common image f_t(x) on the slit.
  Complex image;
  /// |f_t(x') - f_t(x)|.
  double mismatch = 0.0;
};

/// For x > 0 already zipped onto the slit by time t, the point x' < 0 that the
/// reverse flow welds to it. Throws NoPartnerError when f_t(x) is still real
/// or the match misses weld_tolerance.
WeldedPartner find_welded_partner(const DriverPath& driver, double t, double x,
                                  double weld_tolerance = kWeldTolerance);

/// Endpoints (left < 0 < right) of the boundary interval zipped onto the
/// slit by time t.
struct WeldingWindow {
  double left = 0.0;
  double right = 0.0;
};
WeldingWindow welding_window(const DriverPath& driver, double t);

/// CSV with columns step,t,re_w,im_w,re_dw,im_dw,int_R2.
void write_trajectory_csv(std::ostream& out, const FlowTrajectory& traj);

}  // namespace slelqg
