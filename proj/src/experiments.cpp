#include "slelqg/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "slelqg/analytic_core.hpp"
#include "slelqg/errors.hpp"
#include "slelqg/gff.hpp"
#include "slelqg/loewner.hpp"
#include "slelqg/martingale_lab.hpp"
#include "slelqg/parallel.hpp"
#include "slelqg/quantum_zipper.hpp"
#include "slelqg/rng.hpp"

namespace slelqg {

namespace {

using json = nlohmann::json;
constexpr double kPi = std::numbers::pi;

const std::vector<std::string> kGlobalKeys{"experiment", "master_seed", "workers", "output_dir"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_plain(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError("empty number");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + text + "'");
  }
  if (used != t.size()) throw ConfigError("not a number: '" + text + "'");
  return v;
}

std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string complex_text(std::complex<double> z) {
  std::ostringstream os;
  os << std::setprecision(17) << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return os.str();
}

Assertion at_most(std::string name, double value, double limit, bool gating = true) {
  return {std::move(name), value <= limit, value, "<= " + format_real(limit), gating};
}

Assertion within(std::string name, double value, double lo, double hi, bool gating = true) {
  return {std::move(name), value >= lo && value <= hi, value,
          "in [" + format_real(lo) + ", " + format_real(hi) + "]", gating};
}

json mc_record(const std::string& name, const json& params, const McResult& r, double dt, std::uint64_t seed) {
  return {{"name", name},         {"params", params},       {"mean", r.mean},
          {"stderr", r.stderr_mean}, {"target", r.target},  {"z_score", r.z_score},
          {"n_paths", r.n_paths},   {"excluded", r.excluded}, {"dt", dt},
          {"seed", seed}};
}

std::string mc_csv(const std::string& name, const McResult& r, double dt, std::uint64_t seed) {
  std::ostringstream os;
  os << std::setprecision(17) << "name,mean,stderr,target,z_score,n_paths,excluded,dt,seed\n"
     << name << ',' << r.mean << ',' << r.stderr_mean << ',' << r.target << ',' << r.z_score << ','
     << r.n_paths << ',' << r.excluded << ',' << dt << ',' << seed << '\n';
  return os.str();
}

using Runner = std::function<ExperimentReport(const ExperimentInfo&, const ExperimentConfig&)>;

// --- analytic_core --------------------------------------------------------

ExperimentReport run_params_table(const ExperimentInfo& info, const ExperimentConfig& cfg) {
  ExperimentReport rep;
  std::ostringstream csv;
  csv << std::setprecision(17) << "kappa,gamma,gamma_dual,Q,d,d_hat,c\n";
  double q_gap = 0.0, d_gap = 0.0, dhat_gap = 0.0, dual_gap = 0.0;
  json rows = json::array();
  for (const double kappa : cfg.real_list(info, "kappa_list")) {
    const LqgParams p = build_params(kappa);
    q_gap = std::max(q_gap, std::abs(background_charge_from_gamma(p.gamma) - background_charge_from_kappa(kappa)));
    d_gap = std::max(d_gap, std::abs(kpz_dimension(p.alpha_bulk, p) - (1.0 + kappa / 8.0)));
    dual_gap = std::max(dual_gap, std::abs(p.gamma * p.gamma_dual - 4.0));
    if (p.d_boundary) {
      dhat_gap = std::max(dhat_gap, std::abs(kpz_dimension_boundary(p.beta_boundary, p) - (2.0 - 8.0 / kappa)));
    }
    const double c = central_charge(kappa);
    csv << kappa << ',' << p.gamma << ',' << p.gamma_dual << ',' << p.Q << ',' << p.d_bulk << ',';
    if (p.d_boundary) csv << *p.d_boundary;
    csv << ',' << c << '\n';
    rows.push_back({{"kappa", kappa},
                    {"gamma", p.gamma},
                    {"gamma_dual", p.gamma_dual},
                    {"Q", p.Q},
                    {"d", p.d_bulk},
                    {"d_hat", p.d_boundary ? json(*p.d_boundary) : json(nullptr)},
                    {"c", c}});
  }
  rep.result = {{"rows", rows}};
  rep.csv = csv.str();
  rep.assertions = {at_most("Q(gamma) == Q(kappa)", q_gap, 1e-14), at_most("gamma * gamma' == 4", dual_gap, 1e-14),
                    at_most("alpha Q - alpha^2/2 == 1 + kappa/8", d_gap, 1e-14),
                    at_most("beta Q - beta^2 == 2 - 8/kappa", dhat_gap, 1e-14)};
  return rep;
}

ExperimentReport run_kpz_roundtrip(const ExperimentInfo& info, const ExperimentConfig& cfg) {
  const auto n = static_cast<int>(cfg.integer(info, "grid"));
  double roundtrip = 0.0, root = 0.0, kpz_equiv = 0.0;
  for (int a = 0; a < n; ++a) {
    const double gamma = 0.05 + 1.9 * a / (n - 1);
    const LqgParams p = build_params(gamma * gamma);
    for (int b = 0; b < n; ++b) {
      const double delta = 3.0 * b / (n - 1);
      const double x = kpz_bulk(delta, gamma);
      const double back = kpz_bulk_inverse(x, gamma);
      roundtrip = std::max(roundtrip, std::abs(kpz_bulk(back, gamma) - x));
      root = std::max(root, std::abs(back - delta));
      // alpha = gamma (1 - Delta) turns d = alpha Q - alpha^2/2 into d = 2 - 2x.
      const double alpha = gamma * (1.0 - delta);
      kpz_equiv = std::max(kpz_equiv, std::abs(kpz_dimension(alpha, p) - (2.0 - 2.0 * x)));
    }
  }
  ExperimentReport rep;
  rep.result = {{"grid", n}, {"max_roundtrip_err", roundtrip}, {"max_root_err", root}, {"max_kpz_equiv_err", kpz_equiv}};
  std::ostringstream csv;
  csv << std::setprecision(17) << "grid,max_roundtrip_err,max_root_err,max_kpz_equiv_err\n"
      << n << ',' << roundtrip << ',' << root << ',' << kpz_equiv << '\n';
  rep.csv = csv.str();
  rep.assertions = {at_most("x -> Delta -> x round trip", roundtrip, 1e-12), at_most("Delta recovered", root, 1e-12),
                    at_most("d = alpha Q - alpha^2/2 equals 2 - 2x", kpz_equiv, 1e-12)};
  return rep;
}

ExperimentReport run_green_symmetry(const ExperimentInfo& info, const ExperimentConfig& cfg) {
  const auto pairs = static_cast<std::uint64_t>(cfg.integer(info, "pairs"));
  const std::uint64_t seed = rng::derive_seed(cfg.master_seed(), info.name, 0);
  double asym = 0.0;
  std::uint64_t monotone_violations = 0;
  for (std::uint64_t k = 0; k < pairs; ++k) {
    const HalfPlanePoint y(-3.0 + 6.0 * rng::uniform(seed, 4 * k), 0.1 + 2.9 * rng::uniform(seed, 4 * k + 1));
    const HalfPlanePoint z(-3.0 + 6.0 * rng::uniform(seed, 4 * k + 2), 0.1 + 2.9 * rng::uniform(seed, 4 * k + 3));
    const double g1 = neumann_green(y, z);
    const double g2 = neumann_green(z, y);
    asym = std::max(asym, std::abs(g1 - g2) / std::max(1.0, std::abs(g1)));

    const double theta = 2.0 * kPi * rng::uniform(seed ^ 0xA5A5ULL, k);
    double previous = std::numeric_limits<double>::infinity();
    for (int step = 1; step <= 40; ++step) {
      const Complex w = y.z() + std::polar(0.05 * step, theta);
      if (w.imag() <= 0.0) break;
      const double g = neumann_green(y, HalfPlanePoint(w));
      if (!(g < previous)) ++monotone_violations;
      previous = g;
    }
  }
  ExperimentReport rep;
  rep.result = {{"pairs", pairs}, {"max_asymmetry", asym}, {"monotone_violations", monotone_violations}};
  std::ostringstream csv;
  csv << std::setprecision(17) << "pairs,max_asymmetry,monotone_violations\n"
      << pairs << ',' << asym << ',' << monotone_violations << '\n';
  rep.csv = csv.str();
  rep.assertions = {at_most("G(y,z) == G(z,y)", asym, 1e-15),
                    at_most("G decreases along rays", static_cast<double>(monotone_violations), 0.0)};
  return rep;
}

ExperimentReport run_density_identities(const ExperimentInfo& info, const ExperimentConfig& cfg) {
  const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cfg.integer(info, "points")))));
  double bulk_gap = 0.0, area_gap = 0.0, euclid_area = 0.0, euclid_len = 0.0;
  for (const double kappa : cfg.real_list(info, "kappa_list")) {
    const LqgParams p = build_params(kappa);
    for (int a = 0; a < side; ++a) {
      for (int b = 0; b < side; ++b) {
        const HalfPlanePoint z(-2.0 + 4.0 * a / (side - 1), 0.1 + 2.0 * b / (side - 1));
        const double length = expected_bulk_length_density(z, kappa);
        const double route = exp_martingale_initial(z, p.alpha_bulk, kappa) * natural_param_density(z, kappa);
        bulk_gap = std::max(bulk_gap, std::abs(length - route) / std::abs(route));
        const double area = expected_area_density(z, kappa);
        const double area_route = exp_martingale_initial(z, p.gamma, kappa);
        area_gap = std::max(area_gap, std::abs(area - area_route) / std::abs(area_route));
        if (kappa == 4.0) euclid_area = std::max(euclid_area, std::abs(length - 1.0));
      }
    }
  }
  for (int a = 1; a <= 100; ++a) {
    const double x = 0.05 * a;
    euclid_len = std::max(euclid_len, std::abs(*expected_boundary_densities(x, 6.0).intersection_density - 1.0));
    euclid_area = std::max(euclid_area, std::abs(expected_bulk_length_density(HalfPlanePoint(x - 2.5, 0.3), 4.0) - 1.0));
  }
  ExperimentReport rep;
  rep.result = {{"max_bulk_rel_err", bulk_gap},
                {"max_area_rel_err", area_gap},
                {"kappa4_area_dev", euclid_area},
                {"kappa6_length_dev", euclid_len}};
  std::ostringstream csv;
  csv << std::setprecision(17) << "max_bulk_rel_err,max_area_rel_err,kappa4_area_dev,kappa6_length_dev\n"
      << bulk_gap << ',' << area_gap << ',' << euclid_area << ',' << euclid_len << '\n';
  rep.csv = csv.str();
  rep.assertions = {at_most("M0^alpha G == (sin theta)^{8/kappa-2}", bulk_gap, 1e-12),
                    at_most("M0^gamma == expected area density", area_gap, 1e-12),
                    at_most("kappa=4 length density == 1", euclid_area, 1e-15),
                    at_most("kappa=6 intersection density == 1", euclid_len, 1e-15)};
  return rep;
}

// --- loewner ----------------------------------------------------------------

ExperimentReport run_flow_exact(const ExperimentInfo& info, const ExperimentConfig& cfg) {
  const double dt = cfg.real(info, "dt");
  const double total = cfg.real(info, "T");
  const DriverPath zero = sample_driver(0.0, total, dt, 0);
  const std::vector<Complex> starts{{0.0, 1.0}, {1.0, 1.0}, {-2.0, 0.5}, {0.3, 3.0}, {3.0, 0.0}};

  double reverse_err = 0.0;
  double inverse_err = 0.0;
  for (const Complex z : starts) {
    const FlowTrajectory traj = reverse_flow(zero, z);
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      const double t = static_cast<double>(k) * dt;
      const Complex exact = slit_map(z, t);
      const Complex exact_dw = z / exact;
      reverse_err = std::max({reverse_err, std::abs(traj.states[k].w - exact), std::abs(traj.states[k].dw - exact_dw)});
    }
    const FlowState back = forward_map(reversed(zero), traj.final_state().w, zero.n_steps());
    inverse_err = std::max(inverse_err, std::abs(back.w - z));
  }

  // Real start: g_t(3) = sqrt(9 + 4t).
  const FlowState g3 = forward_map(zero, {3.0, 0.0}, zero.n_steps());
  const double forward_real_err = std::abs(g3.w - std::sqrt(9.0 + 4.0 * total));

  // Interior start on the slit's path: g_t(i) = i sqrt(1 - 4t), swallowed at t = 1/4.
  const FlowTrajectory gi = forward_flow(zero, {0.0, 1.0});
  double forward_err = 0.0;
  for (const FlowState& s : gi.states) {
    if (s.t > 0.24) break;
    forward_err = std::max(forward_err, std::abs(s.w - Complex(0.0, std::sqrt(1.0 - 4.0 * s.t))));
  }
  const double swallow_time = gi.final_state().alive ? std::numeric_limits<double>::infinity() : gi.final_state().t;

  // Exact zero cases of the pathwise identities on the imaginary axis.
  const FlowTrajectory pair = reverse_flow(zero, {0.0, 2.0}, Complex(0.0, 1.0));
  const IdentityCheck qv = pathwise_qv_check(pair);
  const IdentityCheck cov = pathwise_covariation_check(pair);

  ExperimentReport rep;
  rep.result = {{"dt", dt},
                {"T", total},
                {"reverse_max_err", reverse_err},
                {"inverse_max_err", inverse_err},
                {"forward_real_err", forward_real_err},
                {"forward_interior_err", forward_err},
                {"swallow_time", swallow_time},
                {"qv_zero_case", {{"lhs", qv.lhs}, {"rhs", qv.rhs}}},
                {"covariation_zero_case", {{"lhs", cov.lhs}, {"rhs", cov.rhs}}}};
  std::ostringstream csv;
  write_trajectory_csv(csv, reverse_flow(zero, {0.0, 1.0}));
  rep.csv = csv.str();
  rep.assertions = {at_most("reverse flow matches sqrt(z^2 - 4t)", reverse_err, 1e-10),
                    at_most("forward flow inverts reverse flow", inverse_err, 1e-10),
                    at_most("g_t(3) == sqrt(9 + 4t)", forward_real_err, 1e-10),
                    at_most("g_t(i) == i sqrt(1 - 4t) before swallowing", forward_err, 1e-10),
                    within("swallowing time of i", swallow_time, 0.25 - 2.0 * dt, 0.25 + dt),
                    at_most("zero-driver QV identity", std::max(std::abs(qv.lhs), std::abs(qv.rhs)), 1e-10),
                    at_most("zero-driver covariation identity", std::max(std::abs(cov.lhs), std::abs(cov.rhs)), 1e-10)};
  return rep;
}

ExperimentReport run_order(const ExperimentInfo& info, const ExperimentConfig& cfg, bool covariation) {
  OrderExperiment e;
  e.name = info.name;
  e.kappa = cfg.real(info, "kappa");
  e.z = cfg.complex(info, "z");
  if (covariation) e.y = cfg.complex(info, "y");
  e.T = cfg.real(info, "T");
  e.dt = cfg.real(info, "dt");
  e.n_paths = static_cast<std::uint64_t>(cfg.integer(info, "N"));
  e.master_seed = cfg.master_seed();
  e.workers = cfg.workers();
  const OrderTest r = identity_order_test(e);
  ExperimentReport rep;
  json params = {{"kappa", e.kappa}, {"z", complex_text(e.z)}, {"T", e.T}, {"dt", e.dt}, {"N", e.n_paths}};
  if (e.y) params["y"] = complex_text(*e.y);
  rep.result = {{"params", params},
                {"mean_err_dt", r.mean_err_coarse},
                {"mean_err_dt_half", r.mean_err_fine},
                {"ratio", r.ratio},
                {"seed", e.master_seed}};
  std::ostringstream csv;
  csv << std::setprecision(17) << "kappa,T,dt,N,mean_err_dt,mean_err_dt_half,ratio\n"
      << e.kappa << ',' << e.T << ',' << e.dt << ',' << e.n_paths << ',' << r.mean_err_coarse << ','
      << r.mean_err_fine << ',' << r.ratio << '\n';
  rep.csv = csv.str();
  rep.assertions = {within("err(dt/2) / err(dt)", r.ratio, 0.3, 0.7)};
  return rep;
}

// --- martingale_lab -----------------------------------------------------------

ExperimentReport run_mc(const ExperimentInfo& info, const ExperimentConfig& cfg, MartingaleQuantity quantity) {
  MartingaleExperiment e;
  e.name = info.name;
  e.quantity = quantity;
  e.kappa = cfg.real(info, "kappa");
  const bool boundary = quantity == MartingaleQuantity::ForwardBoundary;
  e.z = boundary ? Complex(cfg.real(info, "x"), 0.0) : cfg.complex(info, "z");
  if (quantity == MartingaleQuantity::ReverseExpBulk) e.exponent = cfg.real(info, "alpha");
  e.T = cfg.real(info, "T");
  e.dt = cfg.real(info, "dt");
  e.n_paths = static_cast<std::uint64_t>(cfg.integer(info, "N"));
  e.master_seed = cfg.master_seed();
  e.workers = cfg.workers();

  ExperimentReport rep;
  json params = {{"kappa", e.kappa}, {"T", e.T}, {"N", e.n_paths}};
  params[boundary ? "x" : "z"] = boundary ? json(e.z.real()) : json(complex_text(e.z));
  if (quantity == MartingaleQuantity::ReverseExpBulk) {
    params["alpha"] = e.exponent;
    const LqgParams p = build_params(e.kappa);
    params["seiberg_bound_ok"] = satisfies_seiberg_bulk(e.exponent, p);
    params["variance_controlled"] = std::abs(e.exponent) <= 0.5 * p.Q;
  }
  const McResult r = mc_expectation(e);
  rep.result = mc_record(info.name, params, r, e.dt, e.master_seed);
  rep.csv = mc_csv(info.name, r, e.dt, e.master_seed);
  rep.assertions = {at_most("|mean - target| / stderr", std::abs(r.z_score), 3.0)};
  if (quantity == MartingaleQuantity::ForwardLength || quantity == MartingaleQuantity::ForwardBoundary) {
    rep.assertions.push_back(at_most("swallowing exclusion rate", r.exclusion_rate(), 0.01));
  }
  return rep;
}

// --- gff ------------------------------------------------------------------------

ExperimentReport run_gff_moment(const ExperimentInfo& info, const ExperimentConfig& cfg) {
  const auto n = static_cast<int>(cfg.integer(info, "n"));
  const auto fields = static_cast<std::size_t>(cfg.integer(info, "N"));
  const std::vector<double> eps = cfg.real_list(info, "eps_list");
  const std::vector<double> gammas = cfg.real_list(info, "gamma_list");
  const std::uint64_t master = cfg.master_seed();
  const auto averages = parallel_map<std::vector<double>>(fields, cfg.workers(), [&](std::size_t f) {
    const GridField h = sample_gff(UnitDisc{}, n, BoundaryCondition::Dirichlet, rng::derive_seed(master, info.name, f));
    std::vector<double> row;
    row.reserve(eps.size());
    for (const double e : eps) row.push_back(circle_average(h, {0.0, 0.0}, e));
    return row;
  });

  ExperimentReport rep;
  std::ostringstream csv;
  csv << std::setprecision(17) << "gamma,epsilon,log_moment\n";
  json fits = json::array();
  for (const double gamma : gammas) {
    const MomentFit fit = moment_test(averages, gamma, eps);
    for (std::size_t j = 0; j < eps.size(); ++j) csv << gamma << ',' << eps[j] << ',' << fit.log_moments[j] << '\n';
    fits.push_back({{"gamma", gamma}, {"slope", fit.slope}, {"stderr", fit.stderr_slope}, {"target", gamma * gamma / 2}});
    const double z = fit.stderr_slope > 0 ? std::abs(fit.slope - gamma * gamma / 2.0) / fit.stderr_slope
                                          : std::abs(fit.slope - gamma * gamma / 2.0);
    rep.assertions.push_back(at_most("moment slope (gamma=" + format_real(gamma) + ") z-score", z, 3.0));
  }
  json variances = json::array();
  for (std::size_t j = 0; j < eps.size(); ++j) {
    McAccumulator acc;
    for (const auto& row : averages) acc.add(row[j]);
    const double target = std::log(1.0 / eps[j]);
    const double se = acc.variance() * std::sqrt(2.0 / (static_cast<double>(acc.count()) - 1.0));
    variances.push_back({{"epsilon", eps[j]}, {"variance", acc.variance()}, {"target", target}, {"stderr", se}});
    rep.assertions.push_back(
        at_most("Var h_eps(0) vs log(1/eps) (eps=" + format_real(eps[j]) + ") z-score",
                std::abs(acc.variance() - target) / se, 3.0));
  }
  rep.result = {{"n", n}, {"fields", fields}, {"fits", fits}, {"variances", variances}, {"seed", master}};
  rep.csv = csv.str();
  return rep;
}

ExperimentReport run_area_gamma0(const ExperimentInfo& info, const ExperimentConfig& cfg) {
  const auto n = static_cast<int>(cfg.integer(info, "n"));
  const double eps = cfg.real(info, "epsilon");
  const GridField h = sample_gff(UnitDisc{}, n, BoundaryCondition::Dirichlet,
                                 rng::derive_seed(cfg.master_seed(), info.name, 0));
  const QuantumMeasure mu = quantum_area(h, 0.0, eps);
  const double rel = std::abs(mu.total() - kPi) / kPi;
  ExperimentReport rep;
  rep.result = {{"n", n}, {"epsilon", eps}, {"total_mass", mu.total()}, {"target", kPi}, {"rel_err", rel}};
  std::ostringstream csv;
  write_measure_csv(csv, mu);
  rep.csv = csv.str();
  rep.assertions = {at_most("gamma=0 total mass vs disc area", rel, 0.01)};
  return rep;
}

// --- quantum_zipper ---------------------------------------------------------------

ExperimentReport run_welding_trend(const ExperimentInfo& info, const ExperimentConfig& cfg) {
  WeldingTrendConfig c;
  c.kappa = cfg.real(info, "kappa");
  c.t = cfg.real(info, "t");
  c.dt = cfg.real(info, "dt");
  c.epsilons = cfg.real_list(info, "eps_list");
  c.members = static_cast<std::uint64_t>(cfg.integer(info, "N"));
  c.grid_n = static_cast<int>(cfg.integer(info, "n"));
  const double half_width = cfg.real(info, "box_half_width");
  c.box = HalfPlaneBox{half_width, 2.0 * half_width};
  c.master_seed = cfg.master_seed();
  c.workers = cfg.workers();
  const WeldingTrend trend = welding_trend(c);

  WeldingTrendConfig control = c;
  control.gamma = 0.0;
  const WeldingTrend euclid = welding_trend(control);

  ExperimentReport rep;
  rep.result = {{"kappa", c.kappa},
                {"t", c.t},
                {"epsilons", c.epsilons},
                {"members", c.members},
                {"skipped", trend.skipped},
                {"median_rel_diff", trend.median_rel_diff},
                {"control_median_rel_diff", euclid.median_rel_diff}};
  std::ostringstream csv;
  write_welding_csv(csv, trend, c.t);
  rep.csv = csv.str();
  rep.assertions = {
      {"median rel_diff decreases over the epsilon ladder", trend.monotone_decreasing(),
       trend.median_rel_diff.empty() ? 0.0 : trend.median_rel_diff.back(), "strictly decreasing", false},
      {"gamma=0 control shows no decrease", !euclid.monotone_decreasing(),
       euclid.median_rel_diff.empty() ? 0.0 : euclid.median_rel_diff.back(), "not strictly decreasing", false}};
  return rep;
}

ExperimentReport run_cov_transform(const ExperimentInfo& info, const ExperimentConfig& cfg) {
  const double kappa = cfg.real(info, "kappa");
  const double t = cfg.real(info, "t");
  const double dt = cfg.real(info, "dt");
  const auto m = static_cast<int>(cfg.integer(info, "m"));
  const std::string driver_kind = cfg.raw(info, "driver");
  DriverPath driver;
  if (driver_kind == "zero") {
    driver = driver_from_increments(kappa, dt, std::vector<double>(static_cast<std::size_t>(std::lround(t / dt)), 0.0));
  } else if (driver_kind == "brownian") {
    driver = sample_driver(kappa, t, dt, rng::derive_seed(cfg.master_seed(), info.name, 0));
  } else {
    throw ConfigError("driver must be 'zero' or 'brownian'");
  }
  const Rect rect{cfg.real(info, "x0"), cfg.real(info, "x1"), cfg.real(info, "y0"), cfg.real(info, "y1")};
  const CovarianceCheck coarse = covariance_transform_check(rect, driver, t, kappa, m / 2);
  const CovarianceCheck fine = covariance_transform_check(rect, driver, t, kappa, m);
  const double order = std::log2(coarse.rel_err / fine.rel_err);
  ExperimentReport rep;
  rep.result = {{"coarse", to_json(coarse)}, {"fine", to_json(fine)}, {"observed_order", order}};
  std::ostringstream csv;
  csv << std::setprecision(17) << "m,lhs,rhs,rel_err\n";
  for (const auto& c : {coarse, fine}) csv << c.m << ',' << c.lhs << ',' << c.rhs << ',' << c.rel_err << '\n';
  rep.csv = csv.str();
  rep.assertions = {at_most("rel_err at m=" + std::to_string(m), fine.rel_err, 1e-6),
                    within("observed convergence order", order, 1.8, 2.2)};
  return rep;
}

struct Entry {
  ExperimentInfo info;
  Runner run;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    using P = ParamSpec;
    const P kappa_list{"kappa_list", ParamType::RealList, "[2,8/3,3,4,5,6,7,8]", "SLE parameters"};
    std::vector<Entry> t;
    t.push_back({{"params_table", "analytic_core", "Q(gamma) = Q(kappa); d = alpha Q - alpha^2/2 = 1 + kappa/8; "
                                                    "d_hat = beta Q - beta^2 = 2 - 8/kappa",
                  {kappa_list}},
                 run_params_table});
    t.push_back({{"kpz_roundtrip", "analytic_core", "x = (gamma^2/4) Delta^2 + (1 - gamma^2/4) Delta and its inverse",
                  {{"grid", ParamType::Integer, "50", "grid points per axis"}}},
                 run_kpz_roundtrip});
    t.push_back({{"green_symmetry", "analytic_core", "G0(y,z) = -log(|y-z||y-conj z|) symmetric and monotone",
                  {{"pairs", ParamType::Integer, "200", "random pairs"}}},
                 run_green_symmetry});
    t.push_back({{"density_identities", "analytic_core",
                  "M0^alpha G = (sin theta)^{8/kappa-2}; M0^gamma = expected area density",
                  {kappa_list, {"points", ParamType::Integer, "100", "grid points per kappa"}}},
                 run_density_identities});
    t.push_back({{"flow_exact", "loewner", "constant-driver flows equal sqrt(z^2 -/+ 4t)",
                  {{"dt", ParamType::Real, "1e-3", "time step"}, {"T", ParamType::Real, "1", "horizon"}}},
                 run_flow_exact});
    const std::vector<P> order_params{{"kappa", ParamType::Real, "2", ""},
                                      {"z", ParamType::Complex, "1+1i", "start point"},
                                      {"T", ParamType::Real, "0.5", ""},
                                      {"dt", ParamType::Real, "1e-4", ""},
                                      {"N", ParamType::Integer, "100", "paths"}};
    t.push_back({{"qv_check", "martingale_lab", "<h_t(z), h_t(z)> = C_0(z) - C_t(z)", order_params},
                 [](const ExperimentInfo& i, const ExperimentConfig& c) { return run_order(i, c, false); }});
    t.push_back({{"covariation_check", "martingale_lab", "<h_t(y), h_t(z)> = G_0(y,z) - G_t(y,z)",
                  {{"kappa", ParamType::Real, "3", ""},
                   {"y", ParamType::Complex, "1+1i", ""},
                   {"z", ParamType::Complex, "-1+2i", ""},
                   {"T", ParamType::Real, "0.5", ""},
                   {"dt", ParamType::Real, "1e-4", ""},
                   {"N", ParamType::Integer, "100", "paths"}}},
                 [](const ExperimentInfo& i, const ExperimentConfig& c) { return run_order(i, c, true); }});
    const auto mc_params = [](const std::string& kappa, const std::string& T) {
      return std::vector<P>{{"kappa", ParamType::Real, kappa, ""},
                            {"z", ParamType::Complex, "2i", "start point"},
                            {"T", ParamType::Real, T, ""},
                            {"dt", ParamType::Real, "1e-3", ""},
                            {"N", ParamType::Integer, "10000", "paths"}};
    };
    t.push_back({{"mart_h_mc", "martingale_lab", "E h_t(z) = h_0(z)", mc_params("8/3", "0.5")},
                 [](const ExperimentInfo& i, const ExperimentConfig& c) {
                   return run_mc(i, c, MartingaleQuantity::ReverseH);
                 }});
    auto exp_params = mc_params("4", "0.5");
    exp_params.push_back({"alpha", ParamType::Real, "0.3", "exponent"});
    t.push_back({{"exp_mart_mc", "martingale_lab", "E M^alpha_t(z) = |z|^{2 alpha/sqrt kappa} (Im z)^{-alpha^2/2}",
                  exp_params},
                 [](const ExperimentInfo& i, const ExperimentConfig& c) {
                   return run_mc(i, c, MartingaleQuantity::ReverseExpBulk);
                 }});
    t.push_back({{"forward_length_mc", "martingale_lab", "E M_t(z) = G(z) for M_t = G(g_t) |g_t'|^{2-d}",
                  mc_params("2", "0.3")},
                 [](const ExperimentInfo& i, const ExperimentConfig& c) {
                   return run_mc(i, c, MartingaleQuantity::ForwardLength);
                 }});
    t.push_back({{"forward_boundary_mc", "martingale_lab", "E (g_t/g_t')^{d_hat-1}(x) = x^{d_hat-1}",
                  {{"kappa", ParamType::Real, "6", ""},
                   {"x", ParamType::Real, "2", "real start point"},
                   {"T", ParamType::Real, "0.1", ""},
                   {"dt", ParamType::Real, "1e-3", ""},
                   {"N", ParamType::Integer, "10000", "paths"}}},
                 [](const ExperimentInfo& i, const ExperimentConfig& c) {
                   return run_mc(i, c, MartingaleQuantity::ForwardBoundary);
                 }});
    t.push_back({{"gff_moment", "gff", "E exp(gamma h_eps(0)) = eps^{-gamma^2/2} on the unit disc",
                  {{"n", ParamType::Integer, "256", "lattice intervals per side"},
                   {"N", ParamType::Integer, "2000", "fields"},
                   {"gamma_list", ParamType::RealList, "[1,sqrt(2)]", ""},
                   {"eps_list", ParamType::RealList,
                    "[0.25,0.17677669529663687,0.125,0.088388347648318447,0.0625]", ""}}},
                 run_gff_moment});
    t.push_back({{"area_gamma0", "gff", "gamma = 0 quantum area is Lebesgue measure",
                  {{"n", ParamType::Integer, "128", ""}, {"epsilon", ParamType::Real, "0.05", ""}}},
                 run_area_gamma0});
    t.push_back({{"welding_trend", "quantum_zipper",
                  "welded segments [x',0] and [0,x] carry equal quantum length (epsilon trend)",
                  {{"kappa", ParamType::Real, "2", ""},
                   {"t", ParamType::Real, "0.25", ""},
                   {"dt", ParamType::Real, "1e-3", ""},
                   {"eps_list", ParamType::RealList, "[0.08,0.04,0.02]", ""},
                   {"N", ParamType::Integer, "500", "ensemble members"},
                   {"n", ParamType::Integer, "1024", "base field lattice"},
                   {"box_half_width", ParamType::Real, "3", "base box is [-w,w] x [0,2w]"}}},
                 run_welding_trend});
    t.push_back({{"cov_transform", "quantum_zipper",
                  "int_D |f_t'|^d G dz = int_{f_t(D)} N_t(w) dw (conformal covariance)",
                  {{"kappa", ParamType::Real, "6", ""},
                   {"t", ParamType::Real, "1", ""},
                   {"dt", ParamType::Real, "1e-3", ""},
                   {"m", ParamType::Integer, "200", "quadrature intervals per side"},
                   {"driver", ParamType::Text, "zero", "zero | brownian"},
                   {"x0", ParamType::Real, "1", ""},
                   {"x1", ParamType::Real, "2", ""},
                   {"y0", ParamType::Real, "1", ""},
                   {"y1", ParamType::Real, "2", ""}}},
                 run_cov_transform});
    return t;
  }();
  return table;
}

const Entry* find_entry(const std::string& name) {
  for (const Entry& e : entries()) {
    if (e.info.name == name) return &e;
  }
  return nullptr;
}

const ParamSpec* find_param(const ExperimentInfo& info, const std::string& key) {
  for (const ParamSpec& p : info.params) {
    if (p.key == key) return &p;
  }
  return nullptr;
}

void check_value(ParamType type, const std::string& value) {
  switch (type) {
    case ParamType::Real:
      parse_real(value);
      break;
    case ParamType::Integer: {
      const double v = parse_real(value);
      if (v != std::floor(v) || std::abs(v) > 9e15) throw ConfigError("not an integer: '" + value + "'");
      break;
    }
    case ParamType::Complex:
      parse_complex(value);
      break;
    case ParamType::RealList:
      parse_real_list(value);
      break;
    case ParamType::Text:
      break;
  }
}

std::string type_name(ParamType t) {
  switch (t) {
    case ParamType::Real: return "real";
    case ParamType::Integer: return "integer";
    case ParamType::Complex: return "complex";
    case ParamType::RealList: return "real_list";
    case ParamType::Text: return "text";
  }
  return "unknown";
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

double parse_real(const std::string& text) {
  const std::string t = trim(text);
  if (t.rfind("sqrt(", 0) == 0 && t.back() == ')') {
    const double inner = parse_real(t.substr(5, t.size() - 6));
    if (inner < 0.0) throw ConfigError("sqrt of a negative number");
    return std::sqrt(inner);
  }
  if (const auto slash = t.find('/'); slash != std::string::npos) {
    const double den = parse_plain(t.substr(slash + 1));
    if (den == 0.0) throw ConfigError("division by zero in '" + text + "'");
    return parse_plain(t.substr(0, slash)) / den;
  }
  const double v = parse_plain(t);
  if (!std::isfinite(v)) throw ConfigError("non-finite value '" + text + "'");
  return v;
}

std::complex<double> parse_complex(const std::string& text) {
  std::string t = trim(text);
  if (t.empty()) throw ConfigError("empty complex number");
  if (t.back() != 'i') return {parse_real(t), 0.0};
  t.pop_back();
  std::size_t split = std::string::npos;
  for (std::size_t k = t.size(); k-- > 1;) {
    if ((t[k] == '+' || t[k] == '-') && t[k - 1] != 'e' && t[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  const std::string re = split == std::string::npos ? "" : t.substr(0, split);
  std::string im = split == std::string::npos ? t : t.substr(split);
  if (im.empty() || im == "+") im = "1";
  if (im == "-") im = "-1";
  if (im[0] == '+') im.erase(0, 1);
  return {re.empty() ? 0.0 : parse_real(re), parse_real(im)};
}

std::vector<double> parse_real_list(const std::string& text) {
  std::string t = trim(text);
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') throw ConfigError("unterminated list '" + text + "'");
    t = t.substr(1, t.size() - 2);
  }
  std::vector<double> out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(item));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

const std::vector<ExperimentInfo>& experiment_registry() {
  static const std::vector<ExperimentInfo> infos = [] {
    std::vector<ExperimentInfo> v;
    for (const Entry& e : entries()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

const ExperimentInfo* find_experiment(const std::string& name) {
  const Entry* e = find_entry(name);
  return e ? &e->info : nullptr;
}

json registry_json() {
  json out = json::array();
  for (const ExperimentInfo& info : experiment_registry()) {
    json params = json::array();
    for (const ParamSpec& p : info.params) {
      params.push_back({{"key", p.key}, {"type", type_name(p.type)}, {"default", p.default_value}, {"help", p.help}});
    }
    out.push_back({{"name", info.name}, {"module", info.module}, {"verifies", info.verifies}, {"params", params}});
  }
  return out;
}

ExperimentConfig ExperimentConfig::from_ini(const std::string& text) {
  ExperimentConfig cfg;
  CLI::ConfigBase parser;
  std::istringstream in(text);
  std::vector<CLI::ConfigItem> items;
  try {
    items = parser.from_config(in);
  } catch (const CLI::Error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  for (const CLI::ConfigItem& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (item.inputs.empty()) throw ConfigError("config key '" + item.name + "' has no value");
    std::string value;
    if (item.inputs.size() == 1) {
      value = item.inputs.front();
    } else {
      value = "[";
      for (std::size_t k = 0; k < item.inputs.size(); ++k) value += (k ? "," : "") + item.inputs[k];
      value += "]";
    }
    cfg.set(item.name, value);
  }
  return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  if (k.empty()) throw ConfigError("empty config key");
  values_[k == "exp" ? "experiment" : k] = trim(value);
}

std::vector<std::string> ExperimentConfig::experiments() const {
  const auto it = values_.find("experiment");
  if (it == values_.end() || it->second.empty()) throw ConfigError("no experiment selected");
  std::string text = it->second;
  if (!text.empty() && text.front() == '[' && text.back() == ']') text = text.substr(1, text.size() - 2);
  std::vector<std::string> names;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) names.push_back(trim(item));
  }
  if (names.empty()) throw ConfigError("no experiment selected");
  return names;
}

std::uint64_t ExperimentConfig::master_seed() const {
  const auto it = values_.find("master_seed");
  if (it == values_.end()) return 1;
  const double v = parse_real(it->second);
  if (v < 0 || v != std::floor(v)) throw ConfigError("master_seed must be a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

unsigned ExperimentConfig::workers() const {
  const auto it = values_.find("workers");
  if (it == values_.end()) return 1;
  const double v = parse_real(it->second);
  if (v < 1 || v > 1024 || v != std::floor(v)) throw ConfigError("workers must be an integer in [1, 1024]");
  return static_cast<unsigned>(v);
}

void ExperimentConfig::validate() const {
  std::vector<const ExperimentInfo*> selected;
  for (const std::string& name : experiments()) {
    const ExperimentInfo* info = find_experiment(name);
    if (!info) throw ConfigError("unknown experiment '" + name + "'");
    selected.push_back(info);
  }
  master_seed();
  workers();
  for (const auto& [key, value] : values_) {
    if (std::find(kGlobalKeys.begin(), kGlobalKeys.end(), key) != kGlobalKeys.end()) continue;
    bool known = false;
    for (const ExperimentInfo* info : selected) {
      if (const ParamSpec* p = find_param(*info, key)) {
        check_value(p->type, value);
        known = true;
      }
    }
    if (!known) throw ConfigError("key '" + key + "' is not used by the selected experiments");
  }
}

std::string ExperimentConfig::raw(const ExperimentInfo& info, const std::string& key) const {
  if (const auto it = values_.find(key); it != values_.end()) return it->second;
  const ParamSpec* p = find_param(info, key);
  if (!p) throw ConfigError("experiment '" + info.name + "' has no parameter '" + key + "'");
  return p->default_value;
}

double ExperimentConfig::real(const ExperimentInfo& info, const std::string& key) const {
  return parse_real(raw(info, key));
}

std::int64_t ExperimentConfig::integer(const ExperimentInfo& info, const std::string& key) const {
  const double v = parse_real(raw(info, key));
  if (v != std::floor(v)) throw ConfigError("'" + key + "' must be an integer");
  return static_cast<std::int64_t>(v);
}

std::complex<double> ExperimentConfig::complex(const ExperimentInfo& info, const std::string& key) const {
  return parse_complex(raw(info, key));
}

std::vector<double> ExperimentConfig::real_list(const ExperimentInfo& info, const std::string& key) const {
  return parse_real_list(raw(info, key));
}

std::string ExperimentConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

bool ExperimentReport::passed() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed || !a.gating; });
}

ExperimentReport run_experiment(const std::string& name, const ExperimentConfig& config) {
  const Entry* entry = find_entry(name);
  if (!entry) throw ConfigError("unknown experiment '" + name + "'");
  ExperimentReport rep = entry->run(entry->info, config);
  rep.name = name;
  return rep;
}

int run_and_report(const ExperimentConfig& config, const std::filesystem::path& output_dir, std::string* error_message) {
  auto fail = [&](int code, const std::string& msg) {
    if (error_message) *error_message = msg;
    return code;
  };
  try {
    config.validate();
  } catch (const ConfigError& e) {
    return fail(kExitUsage, e.what());
  }

  std::vector<ExperimentReport> reports;
  try {
    for (const std::string& name : config.experiments()) reports.push_back(run_experiment(name, config));
  } catch (const std::exception& e) {
    return fail(kExitUsage, e.what());
  }

  json experiments = json::array();
  std::ostringstream summary;
  summary << std::setprecision(17) << "experiment,assertion,passed,gating,value,threshold\n";
  bool all_passed = true;
  for (const ExperimentReport& r : reports) {
    json assertions = json::array();
    for (const Assertion& a : r.assertions) {
      assertions.push_back(
          {{"name", a.name}, {"passed", a.passed}, {"gating", a.gating}, {"value", a.value}, {"threshold", a.threshold}});
      summary << r.name << ",\"" << a.name << "\"," << (a.passed ? 1 : 0) << ',' << (a.gating ? 1 : 0) << ','
              << a.value << ",\"" << a.threshold << "\"\n";
    }
    experiments.push_back({{"name", r.name}, {"passed", r.passed()}, {"assertions", assertions}, {"result", r.result}});
    all_passed = all_passed && r.passed();
  }

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream stamp;
  stamp << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");

  const json report = {{"tool_version", kToolVersion},
                       {"config", config.values()},
                       {"experiments", experiments},
                       {"passed", all_passed},
                       {"timestamp", stamp.str()}};
  json files = json::array({"report.json", "summary.csv"});
  for (const ExperimentReport& r : reports) files.push_back(r.name + ".csv");
  const json manifest = {{"tool_version", kToolVersion},
                         {"config_hash", hex64(rng::fnv1a(config.canonical()))},
                         {"config", config.values()},
                         {"files", files}};

  try {
    std::filesystem::create_directories(output_dir);
    auto write = [&](const std::string& file, const std::string& content) {
      std::ofstream out(output_dir / file, std::ios::binary);
      out << content;
      if (!out) throw std::runtime_error("cannot write " + (output_dir / file).string());
    };
    write("report.json", report.dump(2) + "\n");
    write("manifest.json", manifest.dump(2) + "\n");
    write("summary.csv", summary.str());
    for (const ExperimentReport& r : reports) write(r.name + ".csv", r.csv);
  } catch (const std::exception& e) {
    return fail(kExitIo, e.what());
  }
  return all_passed ? kExitOk : fail(kExitAssertion, "one or more assertions failed");
}

}  // namespace slelqg
