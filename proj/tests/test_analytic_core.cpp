#include <cmath>
#include <numbers>

#include "doctest.h"
#include "slelqg/analytic_core.hpp"
#include "slelqg/errors.hpp"

using namespace slelqg;
using doctest::Approx;

TEST_CASE("exponent table at the self-dual point and nearby") {
  const LqgParams p4 = build_params(4.0);
  CHECK(p4.gamma == Approx(2.0).epsilon(1e-15));
  CHECK(p4.gamma_dual == Approx(2.0).epsilon(1e-15));
  CHECK(p4.Q == Approx(2.0).epsilon(1e-15));
  CHECK(p4.d_bulk == Approx(1.5).epsilon(1e-15));

  const LqgParams p6 = build_params(6.0);
  CHECK(p6.d_bulk == Approx(1.75).epsilon(1e-15));
  REQUIRE(p6.d_boundary.has_value());
  CHECK(*p6.d_boundary == Approx(2.0 / 3.0).epsilon(1e-15));
  // Independent route: alpha = sqrt(6)/2, Q = sqrt(6)/2 + 2/sqrt(6).
  const double a = std::sqrt(6.0) / 2.0;
  const double q = a + 2.0 / std::sqrt(6.0);
  CHECK(a * q - a * a / 2.0 == Approx(1.75).epsilon(1e-14));
  const double b = std::sqrt(6.0) / 2.0 - 2.0 / std::sqrt(6.0);
  CHECK(b * q - b * b == Approx(2.0 / 3.0).epsilon(1e-14));

  const LqgParams p2 = build_params(2.0);
  CHECK(p2.gamma == Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(p2.gamma_dual == Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
  CHECK(p2.Q == Approx(3.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK_FALSE(p2.d_boundary.has_value());
}

TEST_CASE("background charge agrees between the gamma and kappa forms") {
  for (const double kappa : {0.5, 2.0, 8.0 / 3.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 12.0}) {
    const double gamma = std::min(std::sqrt(kappa), 4.0 / std::sqrt(kappa));
    CHECK(std::abs(background_charge_from_gamma(gamma) - background_charge_from_kappa(kappa)) <= 1e-14);
  }
  CHECK_THROWS_AS(background_charge_from_kappa(0.0), DomainError);
  CHECK_THROWS_AS(build_params(-1.0), DomainError);
}

TEST_CASE("KPZ map and inverse") {
  CHECK(kpz_bulk(0.0, 1.3) == 0.0);
  CHECK(kpz_bulk(1.0, 1.3) == Approx(1.0).epsilon(1e-15));
  CHECK(kpz_bulk(0.5, std::sqrt(8.0 / 3.0)) == Approx(1.0 / 3.0).epsilon(1e-15));
  for (const double gamma : {0.3, 1.0, std::sqrt(2.0), 1.9}) {
    for (const double x : {0.0, 0.1, 0.5, 1.0, 1.7}) {
      const double delta = kpz_bulk_inverse(x, gamma);
      CHECK(delta >= 0.0);
      CHECK(kpz_bulk(delta, gamma) == Approx(x).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(kpz_bulk_inverse(-0.1, 1.0), DomainError);
}

TEST_CASE("dimensions from weights") {
  const LqgParams p6 = build_params(6.0);
  CHECK(kpz_dimension(0.0, p6) == 0.0);
  CHECK(kpz_dimension(std::sqrt(6.0) / 2.0, p6) == Approx(1.75).epsilon(1e-14));
  CHECK(kpz_dimension_boundary(std::sqrt(6.0) / 2.0 - 2.0 / std::sqrt(6.0), p6) == Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(satisfies_seiberg_bulk(p6.alpha_bulk, p6));
  CHECK_FALSE(satisfies_seiberg_bulk(p6.Q + 0.1, p6));
}

TEST_CASE("central charge") {
  CHECK(central_charge(6.0) == 0.0);
  CHECK(central_charge(2.0) == Approx(-2.0).epsilon(1e-15));
  CHECK(central_charge(4.0) == Approx(1.0).epsilon(1e-15));
  CHECK(central_charge(8.0 / 3.0) == Approx(0.0).scale(1.0).epsilon(1e-14));
}

TEST_CASE("Neumann Green function of the half-plane") {
  CHECK(neumann_green({0.0, 1.0}, {0.0, 2.0}) == Approx(-std::log(3.0)).epsilon(1e-15));
  CHECK(neumann_green({1.0, 1.0}, {-1.0, 1.0}) == Approx(-std::log(2.0 * std::sqrt(8.0))).epsilon(1e-15));
  CHECK(neumann_green({1.0, 1.0}, {-1.0, 1.0}) == Approx(-1.73287).epsilon(1e-5));
  CHECK(neumann_green({0.3, 0.7}, {-1.2, 2.5}) == neumann_green({-1.2, 2.5}, {0.3, 0.7}));
  CHECK_THROWS_AS(neumann_green({0.3, 0.7}, {0.3, 0.7}), SingularityError);
  CHECK_THROWS_AS(HalfPlanePoint(0.0, -1.0), DomainError);
}

TEST_CASE("natural parametrization and expected densities") {
  for (const double re : {-2.0, 0.4, 3.0}) CHECK(natural_param_density({re, 0.8}, 8.0) == Approx(1.0).epsilon(1e-15));
  CHECK(natural_param_density({0.0, 1.0}, 2.0) == Approx(1.0).epsilon(1e-15));
  CHECK(natural_param_density({0.0, 2.0}, 6.0) == Approx(std::pow(2.0, -0.25)).epsilon(1e-14));
  CHECK(natural_param_density({0.0, 2.0}, 6.0) == Approx(0.84090).epsilon(1e-5));

  CHECK(expected_bulk_length_density({1.7, 0.2}, 4.0) == Approx(1.0).epsilon(1e-15));
  CHECK(expected_bulk_length_density({0.0, 3.0}, 2.7) == Approx(1.0).epsilon(1e-15));
  CHECK(expected_bulk_length_density({1.0, 1.0}, 2.0) == Approx(0.5).epsilon(1e-15));

  CHECK(*expected_boundary_densities(5.0, 6.0).intersection_density == Approx(1.0).epsilon(1e-15));
  CHECK(expected_boundary_densities(3.0, 4.0).boundary_length_density == Approx(3.0).epsilon(1e-15));
  CHECK(expected_boundary_densities(2.0, 8.0).boundary_length_density == Approx(std::sqrt(2.0)).epsilon(1e-15));

  CHECK(expected_area_density({0.0, 1.0}, 4.0) == Approx(1.0).epsilon(1e-15));
  CHECK(expected_area_density({0.0, 2.0}, 2.0) == Approx(2.0).epsilon(1e-15));
  const double c = std::cos(std::numbers::pi / 4.0);
  CHECK(expected_area_density({c, c}, 8.0) == Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("initial exponential martingale") {
  CHECK(exp_martingale_initial({0.0, 1.0}, 0.7, 3.0) == Approx(1.0).epsilon(1e-15));
  CHECK(exp_martingale_initial({0.0, 2.0}, 1.0, 4.0) == Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(exp_martingale_initial({1.0, 0.0}, 1.0, 4.0), SingularityError);
}
