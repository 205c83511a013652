#include <cmath>
#include <sstream>

#include "doctest.h"
#include "slelqg/errors.hpp"
#include "slelqg/loewner.hpp"
#include "slelqg/rng.hpp"

using namespace slelqg;

namespace {

DriverPath zero_driver(double total, double dt) { return sample_driver(0.0, total, dt, 0); }

/// Brute-force RK4 for dg/dt = 2/g under the zero driver; returns the time at
/// which |g| first drops below `floor`, or the final time.
double rk4_swallow_time(Complex z, double total, double h, double floor) {
  Complex g = z;
  double t = 0.0;
  const auto f = [](Complex w) { return 2.0 / w; };
  while (t < total) {
    const Complex k1 = f(g);
    const Complex k2 = f(g + 0.5 * h * k1);
    const Complex k3 = f(g + 0.5 * h * k2);
    const Complex k4 = f(g + h * k3);
    g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    if (std::abs(g) < floor) return t;
  }
  return t;
}

}  // namespace

TEST_CASE("driver sampling") {
  const DriverPath zero = sample_driver(0.0, 1.0, 1e-3, 99);
  CHECK(zero.n_steps() == 1000);
  for (const double v : zero.increments) CHECK(v == 0.0);

  const DriverPath a = sample_driver(2.0, 1.0, 1e-3, 7);
  const DriverPath b = sample_driver(2.0, 1.0, 1e-3, 7);
  CHECK(a.increments == b.increments);
  CHECK(sample_driver(2.0, 1.0, 1e-3, 8).increments != a.increments);

  CHECK_THROWS_AS(sample_driver(-1.0, 1.0, 1e-3, 1), DomainError);
  CHECK_THROWS_AS(sample_driver(2.0, 1.0, 3e-1, 1), DomainError);
}

TEST_CASE("increment variance matches kappa dt") {
  const DriverPath d = sample_driver(4.0, 1000.0, 1e-3, 2024);
  REQUIRE(d.n_steps() == 1000000);
  double s2 = 0.0;
  for (const double v : d.increments) s2 += v * v;
  const double n = static_cast<double>(d.n_steps());
  const double var = s2 / n;
  // Var of the sample second moment of N(0, s^2) is 2 s^4 / n.
  const double se = 4e-3 * std::sqrt(2.0 / n);
  CHECK(std::abs(var - 4e-3) <= 3.0 * se);
}

TEST_CASE("refinement is a Brownian bridge split") {
  const DriverPath coarse = sample_driver(3.0, 0.5, 1e-3, 11);
  const DriverPath fine = refine_driver(coarse);
  REQUIRE(fine.n_steps() == 2 * coarse.n_steps());
  CHECK(fine.dt == coarse.dt / 2.0);
  for (std::size_t k = 0; k < coarse.n_steps(); ++k) {
    CHECK(fine.increments[2 * k] + fine.increments[2 * k + 1] == doctest::Approx(coarse.increments[k]).epsilon(1e-12));
  }
  CHECK(refine_driver(coarse).increments == fine.increments);
}

TEST_CASE("reverse flow under the zero driver is sqrt(z^2 - 4t)") {
  const DriverPath d = zero_driver(1.0, 1e-3);
  const FlowTrajectory ti = reverse_flow(d, {0.0, 1.0});
  CHECK(std::abs(ti.final_state().w - Complex(0.0, std::sqrt(5.0))) < 1e-10);
  CHECK(std::abs(ti.final_state().dw - Complex(1.0 / std::sqrt(5.0), 0.0)) < 1e-10);

  const Complex z(1.0, 1.0);
  const FlowTrajectory tz = reverse_flow(d, z);
  CHECK(std::abs(tz.final_state().w - std::sqrt(z * z - 4.0)) < 1e-10);
  CHECK(std::abs(tz.final_state().w - Complex(0.48587, 2.05817)) < 1e-5);
  CHECK(std::abs(tz.final_state().dw - z / std::sqrt(z * z - 4.0)) < 1e-10);

  CHECK(tz.states.front().w == z);
  CHECK(tz.states.front().dw == Complex(1.0, 0.0));
}

TEST_CASE("reverse flow start state for any driver") {
  const DriverPath d = sample_driver(2.0, 0.1, 1e-3, 3);
  const FlowTrajectory t = reverse_flow(d, {0.2, 0.4});
  CHECK(t.states.size() == d.n_steps() + 1);
  CHECK(t.states[0].w == Complex(0.2, 0.4));
  CHECK(t.states[0].dw == Complex(1.0, 0.0));
  CHECK(t.int_r2[0] == 0.0);
  for (const FlowState& s : t.states) CHECK(s.w.imag() > 0.0);
  CHECK_THROWS_AS(reverse_flow(d, {0.0, -1.0}), DomainError);
}

TEST_CASE("forward flow: real start and swallowing of an interior point") {
  const double dt = 1e-3;
  const DriverPath d = zero_driver(1.0, dt);
  const FlowState g3 = forward_map(d, {3.0, 0.0}, d.n_steps());
  CHECK(g3.alive);
  CHECK(std::abs(g3.w - Complex(std::sqrt(13.0), 0.0)) < 1e-10);
  CHECK(std::abs(g3.dw - Complex(3.0 / std::sqrt(13.0), 0.0)) < 1e-10);

  // The closed form sqrt(z^2 + 4t) would give sqrt(3) at t = 1 for z = i, but
  // i reaches the tip of the slit at t = 1/4 and is swallowed first.
  const FlowTrajectory gi = forward_flow(d, {0.0, 1.0});
  CHECK_FALSE(gi.final_state().alive);
  const double t_rk4 = rk4_swallow_time({0.0, 1.0}, 1.0, 1e-7, 2.0 * std::sqrt(dt));
  CHECK(std::abs(gi.final_state().t - t_rk4) <= 2.0 * dt);
  CHECK(std::abs(t_rk4 - 0.25) <= 2.0 * dt);
  for (const FlowState& s : gi.states) {
    if (s.t > 0.24) break;
    CHECK(std::abs(s.w - Complex(0.0, std::sqrt(1.0 - 4.0 * s.t))) < 1e-10);
  }
  FlowState dead = gi.final_state();
  CHECK_THROWS_AS(forward_step(dead, dt, 0.0), LifecycleError);
}

TEST_CASE("forward flow on the reversed driver inverts the reverse flow") {
  const DriverPath d = sample_driver(4.0, 0.5, 1e-3, 17);
  for (const Complex z : {Complex(0.3, 0.5), Complex(-1.0, 1.2), Complex(2.0, 0.05)}) {
    const FlowState up = reverse_map(d, z, d.n_steps());
    const FlowState back = forward_map(reversed(d), up.w, d.n_steps());
    REQUIRE(back.alive);
    CHECK(std::abs(back.w - z) < 1e-9);
    CHECK(std::abs(back.dw * up.dw - 1.0) < 1e-9);
  }
}

TEST_CASE("welded partners") {
  const DriverPath zero = zero_driver(0.25, 1e-3);
  const WeldingWindow w0 = welding_window(zero, 0.25);
  CHECK(w0.right == doctest::Approx(1.0).epsilon(0.05));
  CHECK(w0.left == doctest::Approx(-w0.right).epsilon(1e-9));
  for (const double x : {0.2, 0.5, 0.8}) {
    const WeldedPartner p = find_welded_partner(zero, 0.25, x);
    CHECK(p.x_prime == doctest::Approx(-x).epsilon(1e-9));
    CHECK(p.mismatch <= kWeldTolerance);
  }
  CHECK_THROWS_AS(find_welded_partner(zero, 0.25, 2.0), NoPartnerError);
  CHECK_THROWS_AS(find_welded_partner(zero, 0.25, -0.5), DomainError);

  // Random driver: self-consistency by direct re-evaluation of both points.
  int found = 0;
  for (std::uint64_t seed = 0; seed < 20 && found < 5; ++seed) {
    const DriverPath d = sample_driver(2.0, 0.25, 1e-3, rng::derive_seed(5, "weld", seed));
    const WeldingWindow w = welding_window(d, 0.25);
    try {
      const double x = 0.5 * w.right;
      const WeldedPartner p = find_welded_partner(d, 0.25, x);
      const Complex fx = reverse_map(d, {x, 0.0}, d.n_steps()).w;
      const Complex fxp = reverse_map(d, {p.x_prime, 0.0}, d.n_steps()).w;
      CHECK(p.x_prime < 0.0);
      CHECK(p.x_prime >= w.left - 1e-9);
      CHECK(std::abs(fx - fxp) <= kWeldTolerance);
      CHECK(fx.imag() > 0.0);
      ++found;
    } catch (const NoPartnerError&) {
    }
  }
  CHECK(found == 5);
}

TEST_CASE("trajectory CSV") {
  const FlowTrajectory t = reverse_flow(zero_driver(0.002, 1e-3), {0.0, 1.0});
  std::ostringstream os;
  write_trajectory_csv(os, t);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,t,re_w,im_w,re_dw,im_dw,int_R2");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}
