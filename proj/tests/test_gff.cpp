#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "slelqg/errors.hpp"
#include "slelqg/gff.hpp"
#include "slelqg/martingale_lab.hpp"
#include "slelqg/rng.hpp"

using namespace slelqg;

namespace {

constexpr double kPi = std::numbers::pi;

double disc_green(Complex y, Complex z) { return -std::log(std::abs((y - z) / (1.0 - y * std::conj(z)))); }

}  // namespace

TEST_CASE("same seed gives a bit-identical field") {
  const GridField a = sample_gff(UnitDisc{}, 64, BoundaryCondition::Dirichlet, 42);
  const GridField b = sample_gff(UnitDisc{}, 64, BoundaryCondition::Dirichlet, 42);
  CHECK(a.values() == b.values());
  CHECK(sample_gff(UnitDisc{}, 64, BoundaryCondition::Dirichlet, 43).values() != a.values());
  const GridField c = sample_gff(HalfPlaneBox{}, 64, BoundaryCondition::NeumannMeanZero, 42);
  CHECK(c.values() == sample_gff(HalfPlaneBox{}, 64, BoundaryCondition::NeumannMeanZero, 42).values());
}

TEST_CASE("disc field vanishes off the disc") {
  const GridField f = sample_gff(UnitDisc{}, 64, BoundaryCondition::Dirichlet, 1);
  for (int j = 0; j < f.ny(); ++j) {
    for (int i = 0; i < f.nx(); ++i) {
      if (!f.interior_node(i, j)) CHECK(f.at(i, j) == 0.0);
    }
  }
}

TEST_CASE("free-boundary field has mean zero") {
  const GridField f = sample_gff(HalfPlaneBox{2.0, 4.0}, 128, BoundaryCondition::NeumannMeanZero, 9);
  double sum = 0.0, sq = 0.0;
  for (const double v : f.values()) {
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum) / static_cast<double>(f.values().size()) <= 1e-12 * std::sqrt(sq));
  CHECK(sq > 0.0);
}

TEST_CASE("disc field covariance matches the disc Green function") {
  const Complex y(0.3, 0.0), z(-0.2, 0.1), w(0.1, -0.45);
  const std::size_t samples = 2000;
  McAccumulator yz, yw, zw;
  for (std::size_t s = 0; s < samples; ++s) {
    const GridField f = sample_gff(UnitDisc{}, 96, BoundaryCondition::Dirichlet, rng::derive_seed(3, "cov", s));
    const double hy = f.interpolate(y), hz = f.interpolate(z), hw = f.interpolate(w);
    yz.add(hy * hz);
    yw.add(hy * hw);
    zw.add(hz * hw);
  }
  const struct {
    const McAccumulator& acc;
    double target;
  } pairs[] = {{yz, disc_green(y, z)}, {yw, disc_green(y, w)}, {zw, disc_green(z, w)}};
  for (const auto& p : pairs) {
    CHECK(std::abs(p.acc.mean() - p.target) <= 3.0 * p.acc.standard_error());
    CHECK(std::abs(p.acc.mean() - p.target) <= 0.05 * p.target + 3.0 * p.acc.standard_error());
  }
}

TEST_CASE("circle averages") {
  GridField f = make_grid_field(UnitDisc{}, 64, BoundaryCondition::Dirichlet);
  const GridField c = f.shifted(2.5);
  CHECK(circle_average(c, {0.1, -0.2}, 0.3) == doctest::Approx(2.5).epsilon(1e-14));
  CHECK_THROWS_AS(circle_average(c, {0.0, 0.0}, 0.01), DomainError);
  CHECK(circle_points(0.1, 0.01) == 64);
  CHECK(circle_points(1.0, 0.01) == static_cast<int>(std::ceil(2.0 * kPi * 100.0)));

  // Linear fields average to their centre value.
  GridField lin = make_grid_field(HalfPlaneBox{2.0, 4.0}, 64, BoundaryCondition::NeumannMeanZero);
  for (int j = 0; j < lin.ny(); ++j) {
    for (int i = 0; i < lin.nx(); ++i) lin.at(i, j) = 3.0 * lin.node(i, j).real() - lin.node(i, j).imag();
  }
  CHECK(circle_average(lin, {0.2, 1.5}, 0.5) == doctest::Approx(3.0 * 0.2 - 1.5).epsilon(1e-12));
  CHECK_THROWS_AS(circle_average(lin, {1.8, 1.5}, 0.5), GeometryError);

  const FieldView constant = [](Complex) { return -1.25; };
  CHECK(semicircle_average(constant, 0.3, 0.2, 0.01) == doctest::Approx(-1.25).epsilon(1e-14));
}

TEST_CASE("moment fit on synthetic Brownian circle averages") {
  // h_eps(0) as Brownian motion in log(1/eps): exact slope gamma^2/2.
  const std::vector<double> eps{0.25, 0.125, 0.0625, 0.03125};
  std::vector<std::vector<double>> rows(4000);
  for (std::size_t f = 0; f < rows.size(); ++f) {
    double h = 0.0, last = 0.0;
    for (std::size_t j = 0; j < eps.size(); ++j) {
      const double tvar = std::log(1.0 / eps[j]);
      h += std::sqrt(tvar - last) * rng::normal(77, f * 8 + j);
      last = tvar;
      rows[f].push_back(h);
    }
  }
  const MomentFit one = moment_test(rows, 1.0, eps);
  CHECK(std::abs(one.slope - 0.5) <= 3.0 * one.stderr_slope);
  const MomentFit flat = moment_test(rows, 0.0, eps);
  CHECK(flat.slope == 0.0);
  for (const double m : flat.log_moments) CHECK(m == 0.0);
  rows.resize(999);
  CHECK_THROWS_AS(moment_test(rows, 1.0, eps), ConfigError);
}

TEST_CASE("gamma = 0 quantum area is Lebesgue measure") {
  const GridField f = sample_gff(UnitDisc{}, 128, BoundaryCondition::Dirichlet, 5);
  const QuantumMeasure mu = quantum_area(f, 0.0, 0.05);
  CHECK(std::abs(mu.total() - kPi) / kPi <= 0.01);
  CHECK_THROWS_AS(quantum_area(f, 2.0, 0.05), DomainError);

  // Additivity: the measure of the whole is the sum of its cells.
  const GridField g = sample_gff(UnitDisc{}, 64, BoundaryCondition::Dirichlet, 6);
  const QuantumMeasure nu = quantum_area(g, 1.0, 0.1);
  double sum = 0.0;
  for (const double m : nu.cell_mass) {
    CHECK(m > 0.0);
    sum += m;
  }
  CHECK(nu.total() == doctest::Approx(sum).epsilon(1e-14));
}

TEST_CASE("boundary quantum length") {
  const GridField f = sample_gff(HalfPlaneBox{2.0, 4.0}, 128, BoundaryCondition::NeumannMeanZero, 8);
  CHECK(boundary_quantum_length(f, 0.0, -0.5, 0.75, 0.1) == doctest::Approx(1.25).epsilon(1e-12));
  const double whole = boundary_quantum_length(f, 1.0, -0.5, 0.75, 0.1);
  const double split = boundary_quantum_length(f, 1.0, -0.5, 0.2, 0.1) + boundary_quantum_length(f, 1.0, 0.2, 0.75, 0.1);
  CHECK(whole == doctest::Approx(split).epsilon(1e-12));
  CHECK(whole > 0.0);
  CHECK_THROWS_AS(boundary_quantum_length(f, 1.0, 1.5, 1.95, 0.1), GeometryError);
  const GridField disc = sample_gff(UnitDisc{}, 64, BoundaryCondition::Dirichlet, 8);
  CHECK_THROWS_AS(boundary_quantum_length(disc, 1.0, -0.5, 0.5, 0.1), ConfigError);
}

TEST_CASE("reflection symmetrization and configuration errors") {
  const GridField f = sample_gff(HalfPlaneBox{2.0, 4.0}, 32, BoundaryCondition::NeumannMeanZero, 2);
  const GridField s = reflection_symmetrized(f);
  for (int j = 0; j < s.ny(); ++j) {
    for (int i = 0; i < s.nx(); ++i) CHECK(s.at(i, j) == s.at(s.nx() - 1 - i, j));
  }
  CHECK_THROWS_AS(make_grid_field(UnitDisc{}, 8, BoundaryCondition::Dirichlet), ConfigError);
  CHECK_THROWS_AS(make_grid_field(UnitDisc{}, 64, BoundaryCondition::NeumannMeanZero), ConfigError);
}

TEST_CASE("field serialization") {
  const GridField f = sample_gff(UnitDisc{}, 16, BoundaryCondition::Dirichlet, 3);
  const nlohmann::json h = field_header(f);
  CHECK(h.at("seed") == 3);
  std::ostringstream bin;
  write_field(bin, f);
  CHECK(bin.str().size() == f.values().size() * sizeof(double));
}
