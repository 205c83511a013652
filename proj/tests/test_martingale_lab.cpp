#include <cmath>

#include "doctest.h"
#include "slelqg/analytic_core.hpp"
#include "slelqg/errors.hpp"
#include "slelqg/loewner.hpp"
#include "slelqg/martingale_lab.hpp"

using namespace slelqg;
using doctest::Approx;

namespace {

FlowState at_start(Complex z) { return FlowState{0.0, z, {1.0, 0.0}, true}; }

FlowState zero_driver_state(Complex z, double t) {
  const DriverPath d = sample_driver(0.0, t, 1e-3, 0);
  return reverse_map(d, z, d.n_steps());
}

}  // namespace

TEST_CASE("streaming accumulator") {
  McAccumulator all, left, right;
  const double xs[] = {1.0, 4.0, -2.0, 7.5, 3.25, 0.0, 9.0};
  double sum = 0.0;
  for (const double x : xs) sum += x;
  const double mean = sum / 7.0;
  double ss = 0.0;
  for (const double x : xs) ss += (x - mean) * (x - mean);
  for (int k = 0; k < 7; ++k) {
    all.add(xs[k]);
    (k < 3 ? left : right).add(xs[k]);
  }
  left.merge(right);
  CHECK(all.mean() == Approx(mean).epsilon(1e-15));
  CHECK(all.variance() == Approx(ss / 6.0).epsilon(1e-14));
  CHECK(all.standard_error() == Approx(std::sqrt(ss / 6.0 / 7.0)).epsilon(1e-14));
  CHECK(left.count() == 7);
  CHECK(left.mean() == Approx(mean).epsilon(1e-14));
  CHECK(left.variance() == Approx(ss / 6.0).epsilon(1e-14));
}

TEST_CASE("reverse-flow field martingale") {
  CHECK(mart_h(at_start({0.0, 1.0}), 3.0) == 0.0);
  CHECK(mart_h(at_start({2.0, 0.0}), 4.0) == Approx(std::log(2.0)).epsilon(1e-15));
  const FlowState s = zero_driver_state({0.0, 1.0}, 1.0);
  CHECK(mart_h(s, 4.0) == Approx(-0.5 * std::log(5.0)).epsilon(1e-10));
  CHECK_THROWS_AS(mart_h(at_start({0.0, 0.0}), 4.0), SingularityError);
  FlowState dead = s;
  dead.alive = false;
  CHECK_THROWS_AS(mart_h(dead, 4.0), LifecycleError);
}

TEST_CASE("conformal factor") {
  CHECK(conformal_factor_C(at_start({0.0, 1.0})) == 0.0);
  CHECK(conformal_factor_C(at_start({0.7, 0.4})) == Approx(-std::log(0.4)).epsilon(1e-15));
  CHECK(std::abs(conformal_factor_C(zero_driver_state({0.0, 1.0}, 1.0))) < 1e-10);
}

TEST_CASE("bulk exponential martingale and its dual form") {
  CHECK(exp_martingale_bulk(at_start({0.0, 1.0}), 0.37, 2.5) == Approx(1.0).epsilon(1e-14));
  CHECK(exp_martingale_bulk(at_start({0.0, 2.0}), 1.0, 4.0) == Approx(std::sqrt(2.0)).epsilon(1e-14));
  const FlowState s = zero_driver_state({0.0, 1.0}, 1.0);
  CHECK(exp_martingale_bulk(s, 1.0, 4.0) == Approx(1.0 / std::sqrt(5.0)).epsilon(1e-9));

  const DriverPath d = sample_driver(2.0, 0.5, 1e-3, 4);
  for (const FlowState& st : reverse_flow(d, {1.0, 1.0}).states) {
    const ExpMartingaleForms f = exp_martingale_forms(st, 0.3, 2.0);
    CHECK(std::abs(f.exponential - f.product) <= 1e-10 * std::abs(f.product));
  }
  CHECK_THROWS_AS(exp_martingale_bulk(at_start({1.0, 0.0}), 1.0, 4.0), SingularityError);
}

TEST_CASE("boundary exponential martingale") {
  const double beta = std::sqrt(6.0) / 2.0 - 2.0 / std::sqrt(6.0);
  CHECK(exp_martingale_boundary(at_start({1.0, 0.0}), beta, 6.0) == Approx(1.0).epsilon(1e-14));
  CHECK(exp_martingale_boundary(at_start({std::exp(1.0), 0.0}), beta, 6.0) ==
        Approx(std::exp(1.0 / 3.0)).epsilon(1e-13));
  const FlowState s = zero_driver_state({3.0, 0.0}, 1.0);
  CHECK(s.w.real() == Approx(std::sqrt(5.0)).epsilon(1e-10));
  const double u = std::sqrt(5.0);
  const double fp = 3.0 / std::sqrt(5.0);
  const double q = background_charge_from_kappa(6.0);
  const double expected = std::pow(u, 2.0 * beta / std::sqrt(6.0)) * std::pow(fp, beta * q - beta * beta);
  CHECK(exp_martingale_boundary(s, beta, 6.0) == Approx(expected).epsilon(1e-9));
  CHECK_THROWS_AS(exp_martingale_boundary(at_start({1.0, 0.5}), beta, 6.0), DomainError);
}

TEST_CASE("pathwise identities: exact zero cases and t = 0") {
  const DriverPath zero = sample_driver(0.0, 1.0, 1e-3, 0);
  const FlowTrajectory t = reverse_flow(zero, {0.0, 2.0}, Complex(0.0, 0.5));
  const IdentityCheck qv = pathwise_qv_check(t);
  CHECK(std::abs(qv.lhs) <= 1e-10);
  CHECK(std::abs(qv.rhs) <= 1e-10);
  const IdentityCheck cov = pathwise_covariation_check(t);
  CHECK(std::abs(cov.lhs) <= 1e-10);
  CHECK(std::abs(cov.rhs) <= 1e-10);

  const DriverPath d = sample_driver(2.0, 0.5, 1e-3, 1);
  const FlowTrajectory t0 = reverse_flow(d, {1.0, 1.0}, Complex(-1.0, 2.0), std::size_t{0});
  CHECK(pathwise_qv_check(t0).lhs == 0.0);
  CHECK(pathwise_qv_check(t0).rhs == 0.0);
  CHECK(pathwise_covariation_check(t0).abs_err == 0.0);
  CHECK_THROWS_AS(pathwise_covariation_check(reverse_flow(d, {1.0, 1.0})), ConfigError);
}

TEST_CASE("pathwise QV identity converges at first order") {
  OrderExperiment e;
  e.name = "unit_qv";
  e.kappa = 2.0;
  e.z = {1.0, 1.0};
  e.T = 0.5;
  e.dt = 1e-3;
  e.n_paths = 40;
  const OrderTest r = identity_order_test(e);
  CHECK(r.ratio >= 0.3);
  CHECK(r.ratio <= 0.7);
  e.y = Complex(-1.0, 2.0);
  e.kappa = 3.0;
  const OrderTest c = identity_order_test(e);
  CHECK(c.ratio >= 0.3);
  CHECK(c.ratio <= 0.7);
}

TEST_CASE("forward martingales") {
  const FlowState s{0.3, {0.4, 1.3}, {0.8, -0.2}, true};
  CHECK(forward_length_martingale(s, 8.0) == Approx(1.0).epsilon(1e-15));
  CHECK(forward_length_martingale(at_start({0.0, 2.0}), 6.0) == Approx(std::pow(2.0, -0.25)).epsilon(1e-14));
  CHECK(forward_boundary_martingale(at_start({2.0, 0.0}), 6.0) == Approx(std::pow(2.0, -1.0 / 3.0)).epsilon(1e-14));
  CHECK_THROWS_AS(forward_boundary_martingale(at_start({2.0, 0.0}), 3.0), DomainError);
  FlowState dead = s;
  dead.alive = false;
  CHECK_THROWS_AS(forward_length_martingale(dead, 2.0), LifecycleError);
}

TEST_CASE("Monte Carlo expectations and the deterministic reduction") {
  MartingaleExperiment e;
  e.name = "unit_mc";
  e.quantity = MartingaleQuantity::ReverseExpBulk;
  e.z = {0.0, 2.0};
  e.kappa = 4.0;
  e.exponent = 0.3;
  e.T = 0.5;
  e.dt = 1e-3;
  e.n_paths = 2000;
  e.workers = 1;
  const McResult one = mc_expectation(e);
  e.workers = 4;
  const McResult four = mc_expectation(e);
  CHECK(one.mean == four.mean);
  CHECK(one.stderr_mean == four.stderr_mean);
  CHECK(std::abs(one.z_score) <= 3.0);
  CHECK(one.target == Approx(exp_martingale_initial({0.0, 2.0}, 0.3, 4.0)).epsilon(1e-15));

  e.n_paths = 50;
  CHECK_THROWS_AS(mc_expectation(e), ConfigError);
  e.n_paths = 200;
  e.quantity = MartingaleQuantity::ForwardBoundary;
  CHECK_THROWS_AS(mc_expectation(e), ConfigError);
}
