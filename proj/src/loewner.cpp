#include "slelqg/loewner.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <string>
#include <utility>

#include "slelqg/errors.hpp"
#include "slelqg/rng.hpp"

namespace slelqg {

namespace {

constexpr std::uint64_t kRefineStream = 0x5EF1DE5ULL;

void require_finite_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw DomainError(std::string(what) + " must be positive and finite");
  }
}

double r_of(Complex w) { return (2.0 / w).real(); }

/// Which way a real point leaves the axis on a reverse step.
enum class ZipOutcome { StillReal, ZippedHere, ZippedBefore };

struct ZipProbe {
  ZipOutcome outcome = ZipOutcome::StillReal;
  double pre_slit = 0.0;  // real pre-slit position at the probed step
};

/// Runs a real start point for steps [0, step) and reports its real pre-slit
/// position at `step`, or that it left the axis earlier.
ZipProbe probe_real_point(const DriverPath& driver, double x, std::size_t step) {
  const double half_width = 2.0 * std::sqrt(driver.dt);
  FlowState s{0.0, Complex(x, 0.0), Complex(1.0, 0.0), true};
  for (std::size_t k = 0; k < step; ++k) {
    if (s.w.imag() > 0.0) return {ZipOutcome::ZippedBefore, 0.0};
    reverse_step(s, driver.dt, driver.increments[k]);
  }
  if (s.w.imag() > 0.0) return {ZipOutcome::ZippedBefore, 0.0};
  const double u = s.w.real();
  return {std::abs(u) < half_width ? ZipOutcome::ZippedHere : ZipOutcome::StillReal, u};
}

/// First step at which a real point is zipped, with its pre-slit position.
std::optional<std::pair<std::size_t, double>> zip_step(const DriverPath& driver, double x,
                                                       std::size_t n_steps) {
  const double half_width = 2.0 * std::sqrt(driver.dt);
  FlowState s{0.0, Complex(x, 0.0), Complex(1.0, 0.0), true};
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double u = s.w.real();
    if (std::abs(u) < half_width) return std::make_pair(k, u);
    reverse_step(s, driver.dt, driver.increments[k]);
  }
  return std::nullopt;
}

bool zipped_by(const DriverPath& driver, double x, std::size_t n_steps) {
  return zip_step(driver, x, n_steps).has_value();
}

/// Largest |x| on one side that is zipped by n_steps.
double window_edge(const DriverPath& driver, double sign, std::size_t n_steps) {
  double inner = 0.0;
  double outer = 2.0 * std::sqrt(driver.dt);
  while (zipped_by(driver, sign * outer, n_steps)) {
    inner = outer;
    outer *= 2.0;
  }
  for (int it = 0; it < kWeldMaxIterations; ++it) {
    const double mid = 0.5 * (inner + outer);
    if (mid == inner || mid == outer) break;
    (zipped_by(driver, sign * mid, n_steps) ? inner : outer) = mid;
  }
  return inner;
}

}  // namespace

std::size_t DriverPath::steps_for(double t) const {
  if (!std::isfinite(t) || t < 0.0) throw DomainError("time must be finite and nonnegative");
  const double steps = std::round(t / dt);
  if (std::abs(steps * dt - t) > 1e-9 * std::max(1.0, t)) {
    throw DomainError("time " + std::to_string(t) + " is not on the driver grid");
  }
  if (steps > static_cast<double>(increments.size())) {
    throw DomainError("time " + std::to_string(t) + " exceeds the driver horizon");
  }
  return static_cast<std::size_t>(steps);
}

DriverPath sample_driver(double kappa, double total_time, double dt, std::uint64_t seed) {
  if (!std::isfinite(kappa) || kappa < 0.0) throw DomainError("kappa must be finite and >= 0");
  require_finite_positive(total_time, "total_time");
  require_finite_positive(dt, "dt");
  const double steps = std::round(total_time / dt);
  if (steps < 1.0 || std::abs(steps * dt - total_time) > 1e-9 * total_time) {
    throw DomainError("dt must divide total_time");
  }
  DriverPath d;
  d.kappa = kappa;
  d.dt = dt;
  d.seed = seed;
  d.increments.resize(static_cast<std::size_t>(steps));
  const double scale = std::sqrt(kappa * dt);
  for (std::size_t k = 0; k < d.increments.size(); ++k) {
    d.increments[k] = kappa == 0.0 ? 0.0 : scale * rng::normal(seed, k);
  }
  return d;
}

DriverPath driver_from_increments(double kappa, double dt, std::vector<double> increments) {
  require_finite_positive(dt, "dt");
  DriverPath d;
  d.kappa = kappa;
  d.dt = dt;
  d.increments = std::move(increments);
  return d;
}

DriverPath refine_driver(const DriverPath& driver) {
  DriverPath fine;
  fine.kappa = driver.kappa;
  fine.dt = driver.dt / 2.0;
  fine.seed = driver.seed;
  fine.level = driver.level + 1;
  fine.increments.resize(2 * driver.increments.size());
  const std::uint64_t stream = rng::combine(rng::combine(driver.seed, kRefineStream), fine.level);
  const double bridge_sd = std::sqrt(driver.kappa * driver.dt / 4.0);
  for (std::size_t k = 0; k < driver.increments.size(); ++k) {
    const double half = driver.increments[k] / 2.0;
    const double wiggle = driver.kappa == 0.0 ? 0.0 : bridge_sd * rng::normal(stream, k);
    fine.increments[2 * k] = half + wiggle;
    fine.increments[2 * k + 1] = half - wiggle;
  }
  return fine;
}

DriverPath reversed(const DriverPath& driver) {
  DriverPath r = driver;
  r.increments.assign(driver.increments.rbegin(), driver.increments.rend());
  return r;
}

Complex slit_map(Complex w, double dt) {
  if (w == Complex(0.0, 0.0)) throw LifecycleError("point absorbed into the seed");
  Complex s = w * std::sqrt(1.0 - 4.0 * dt / (w * w));
  if (s.imag() < 0.0) s = -s;
  return s;
}

Complex unslit_map(Complex w, double dt) {
  if (w == Complex(0.0, 0.0)) return {0.0, 2.0 * std::sqrt(dt)};
  Complex s = w * std::sqrt(1.0 + 4.0 * dt / (w * w));
  if (s.imag() < 0.0) s = -s;
  return s;
}

void reverse_step(FlowState& state, double dt, double increment) {
  const Complex pre = state.w;
  const Complex slit = slit_map(pre, dt);
  if (slit == Complex(0.0, 0.0)) throw LifecycleError("point reached the tip of the slit");
  state.dw *= pre / slit;
  state.w = slit - increment;
  state.t += dt;
}

void forward_step(FlowState& state, double dt, double increment) {
  if (!state.alive) throw LifecycleError("forward step on a swallowed point");
  const Complex shifted = state.w + increment;
  // A real point that jumps across the driver has been swallowed by the hull.
  if (state.w.imag() == 0.0 && (shifted.real() > 0.0) != (state.w.real() > 0.0)) {
    state.w = shifted;
    state.t += dt;
    state.alive = false;
    return;
  }
  const Complex image = unslit_map(shifted, dt);
  state.dw *= shifted / image;
  state.w = image;
  state.t += dt;
  if (std::abs(image) < 2.0 * std::sqrt(dt)) state.alive = false;
}

FlowTrajectory reverse_flow(const DriverPath& driver, Complex z0, std::optional<Complex> track_pair,
                            std::optional<std::size_t> n_steps) {
  if (z0.imag() < 0.0 || (track_pair && track_pair->imag() < 0.0)) {
    throw DomainError("reverse_flow start points must lie in the closed upper half-plane");
  }
  const std::size_t steps = n_steps.value_or(driver.n_steps());
  if (steps > driver.n_steps()) throw DomainError("requested steps exceed the driver horizon");

  FlowTrajectory traj;
  traj.dt = driver.dt;
  traj.states.reserve(steps + 1);
  traj.int_r2.reserve(steps + 1);
  FlowState z{0.0, z0, Complex(1.0, 0.0), true};
  traj.states.push_back(z);
  traj.int_r2.push_back(0.0);

  FlowState y;
  if (track_pair) {
    y = FlowState{0.0, *track_pair, Complex(1.0, 0.0), true};
    traj.pair_states.reserve(steps + 1);
    traj.int_cross.reserve(steps + 1);
    traj.pair_states.push_back(y);
    traj.int_cross.push_back(0.0);
  }

  double acc = 0.0;
  double cross = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    reverse_step(z, driver.dt, driver.increments[k]);
    const double rz = r_of(z.w);
    acc += rz * rz * driver.dt;
    traj.states.push_back(z);
    traj.int_r2.push_back(acc);
    if (track_pair) {
      reverse_step(y, driver.dt, driver.increments[k]);
      cross += r_of(y.w) * rz * driver.dt;
      traj.pair_states.push_back(y);
      traj.int_cross.push_back(cross);
    }
  }
  return traj;
}

FlowState reverse_map(const DriverPath& driver, Complex z0, std::size_t n_steps) {
  if (n_steps > driver.n_steps()) throw DomainError("requested steps exceed the driver horizon");
  FlowState s{0.0, z0, Complex(1.0, 0.0), true};
  for (std::size_t k = 0; k < n_steps; ++k) reverse_step(s, driver.dt, driver.increments[k]);
  return s;
}

FlowTrajectory forward_flow(const DriverPath& driver, Complex z0, std::optional<std::size_t> n_steps) {
  if (z0.imag() < 0.0 || z0 == Complex(0.0, 0.0)) {
    throw DomainError("forward_flow needs Im z0 > 0 or a nonzero real start");
  }
  const std::size_t steps = n_steps.value_or(driver.n_steps());
  if (steps > driver.n_steps()) throw DomainError("requested steps exceed the driver horizon");

  FlowTrajectory traj;
  traj.dt = driver.dt;
  FlowState s{0.0, z0, Complex(1.0, 0.0), true};
  traj.states.push_back(s);
  traj.int_r2.push_back(0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < steps && s.alive; ++k) {
    forward_step(s, driver.dt, driver.increments[k]);
    const double r = r_of(s.w);
    acc += r * r * driver.dt;
    traj.states.push_back(s);
    traj.int_r2.push_back(acc);
  }
  return traj;
}

FlowState forward_map(const DriverPath& driver, Complex z0, std::size_t n_steps) {
  if (n_steps > driver.n_steps()) throw DomainError("requested steps exceed the driver horizon");
  FlowState s{0.0, z0, Complex(1.0, 0.0), true};
  for (std::size_t k = 0; k < n_steps && s.alive; ++k) forward_step(s, driver.dt, driver.increments[k]);
  return s;
}

WeldingWindow welding_window(const DriverPath& driver, double t) {
  const std::size_t steps = driver.steps_for(t);
  if (steps == 0) return {};
  return {-window_edge(driver, -1.0, steps), window_edge(driver, 1.0, steps)};
}

WeldedPartner find_welded_partner(const DriverPath& driver, double t, double x, double weld_tolerance) {
  if (!std::isfinite(x) || x <= 0.0) throw DomainError("find_welded_partner needs x > 0");
  const std::size_t steps = driver.steps_for(t);
  const auto zip = zip_step(driver, x, steps);
  if (!zip) throw NoPartnerError("x = " + std::to_string(x) + " is not zipped by time t");
  const auto [zip_at, u_star] = *zip;

  // The partner reaches the same pre-slit slot from the other side: its real
  // position at step zip_at must be -u_star. That position increases with x'.
  const double target = -u_star;
  auto too_close = [&](double xp) {
    const ZipProbe p = probe_real_point(driver, xp, zip_at);
    return p.outcome == ZipOutcome::ZippedBefore || p.pre_slit > target;
  };

  double hi = 0.0;
  double lo = -x;
  for (int it = 0; it < 64 && too_close(lo); ++it) {
    hi = lo;
    lo *= 2.0;
  }
  if (too_close(lo)) throw NoPartnerError("failed to bracket the welded partner");

  for (int it = 0; it < kWeldMaxIterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (too_close(mid) ? hi : lo) = mid;
  }

  const Complex image = reverse_map(driver, Complex(x, 0.0), steps).w;
  WeldedPartner best;
  best.mismatch = std::numeric_limits<double>::infinity();
  for (const double candidate : {lo, hi}) {
    if (candidate >= 0.0) continue;
    const Complex other = reverse_map(driver, Complex(candidate, 0.0), steps).w;
    const double gap = std::abs(other - image);
    if (gap < best.mismatch) best = WeldedPartner{candidate, image, gap};
  }
  if (!(best.mismatch <= weld_tolerance)) {
    throw NoPartnerError("welded partner mismatch " + std::to_string(best.mismatch) +
                         " exceeds tolerance");
  }
  return best;
}

void write_trajectory_csv(std::ostream& out, const FlowTrajectory& traj) {
  out << "step,t,re_w,im_w,re_dw,im_dw,int_R2\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const FlowState& s = traj.states[k];
    out << k << ',' << s.t << ',' << s.w.real() << ',' << s.w.imag() << ',' << s.dw.real() << ','
        << s.dw.imag() << ',' << traj.int_r2[k] << '\n';
  }
}

}  // namespace slelqg
