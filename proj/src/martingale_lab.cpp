#include "slelqg/martingale_lab.hpp"

#include <cmath>
#include <limits>

#include "slelqg/analytic_core.hpp"
#include "slelqg/errors.hpp"
#include "slelqg/parallel.hpp"
#include "slelqg/rng.hpp"

namespace slelqg {

void McAccumulator::add(double x) {
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (x - mean_);
}

void McAccumulator::merge(const McAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double n_a = static_cast<double>(count_);
  const double n_b = static_cast<double>(other.count_);
  const double n = n_a + n_b;
  const double delta = other.mean_ - mean_;
  mean_ += delta * n_b / n;
  m2_ += other.m2_ + delta * delta * n_a * n_b / n;
  count_ += other.count_;
}

double McAccumulator::variance() const {
  return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_ - 1);
}

double McAccumulator::standard_error() const {
  if (count_ < 2) return 0.0;
  const double n = static_cast<double>(count_);
  return std::sqrt(m2_ / (n * (n - 1.0)));
}

double mart_h(const FlowState& state, double kappa) {
  if (!state.alive) throw LifecycleError("mart_h on a swallowed state");
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  const double modulus = std::abs(state.w);
  if (modulus == 0.0) throw SingularityError("mart_h at w = 0");
  return 2.0 / std::sqrt(kappa) * std::log(modulus) +
         background_charge_from_kappa(kappa) * std::log(std::abs(state.dw));
}

double conformal_factor_C(const FlowState& state) {
  if (!(state.w.imag() > 0.0)) throw SingularityError("conformal factor needs Im w > 0");
  return -std::log(state.w.imag() * std::abs(state.dw));
}

ExpMartingaleForms exp_martingale_forms(const FlowState& state, double alpha, double kappa) {
  if (!(state.w.imag() > 0.0)) throw SingularityError("bulk exponential martingale needs Im w > 0");
  const double q = background_charge_from_kappa(kappa);
  const double a2 = alpha * alpha / 2.0;
  ExpMartingaleForms out;
  out.exponential = std::exp(alpha * mart_h(state, kappa) + a2 * conformal_factor_C(state));
  out.product = std::pow(std::abs(state.w), 2.0 * alpha / std::sqrt(kappa)) *
                std::pow(std::abs(state.dw), alpha * q - a2) * std::pow(state.w.imag(), -a2);
  return out;
}

namespace {

void require_agreement(double a, double b, const char* what) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (std::abs(a - b) > kDualFormTolerance * scale) {
    throw ConsistencyFault(std::string(what) + ": closed forms disagree");
  }
}

}  // namespace

double exp_martingale_bulk(const FlowState& state, double alpha, double kappa) {
  const ExpMartingaleForms forms = exp_martingale_forms(state, alpha, kappa);
  require_agreement(forms.exponential, forms.product, "bulk exponential martingale");
  return forms.product;
}

double exp_martingale_boundary(const FlowState& state, double beta, double kappa) {
  if (state.w.imag() != 0.0 || state.dw.imag() != 0.0 || state.w.real() <= 0.0) {
    throw DomainError("boundary martingale needs a real point right of the welding window");
  }
  const double u = state.w.real();
  const double slope = state.dw.real();
  const double q = background_charge_from_kappa(kappa);
  const double product = std::pow(u, 2.0 * beta / std::sqrt(kappa)) * std::pow(slope, beta * q - beta * beta);
  const double exponential = std::exp(beta * mart_h(state, kappa)) * std::pow(slope, -beta * beta);
  require_agreement(exponential, product, "boundary exponential martingale");
  return product;
}

IdentityCheck pathwise_qv_check(const FlowTrajectory& traj) {
  IdentityCheck out;
  out.lhs = traj.int_r2.back();
  out.rhs = conformal_factor_C(traj.states.front()) - conformal_factor_C(traj.final_state());
  out.abs_err = std::abs(out.lhs - out.rhs);
  return out;
}

IdentityCheck pathwise_covariation_check(const FlowTrajectory& traj) {
  if (traj.pair_states.empty()) throw ConfigError("covariation check needs a tracked pair");
  const auto point = [](const FlowState& s) { return HalfPlanePoint(s.w); };
  IdentityCheck out;
  out.lhs = traj.int_cross.back();
  out.rhs = neumann_green(point(traj.pair_states.front()), point(traj.states.front())) -
            neumann_green(point(traj.pair_states.back()), point(traj.final_state()));
  out.abs_err = std::abs(out.lhs - out.rhs);
  return out;
}

double forward_length_martingale(const FlowState& state, double kappa) {
  if (!state.alive) throw LifecycleError("forward length martingale on a swallowed state");
  const double d = 1.0 + kappa / 8.0;
  return natural_param_density(HalfPlanePoint(state.w), kappa) * std::pow(std::abs(state.dw), 2.0 - d);
}

double forward_boundary_martingale(const FlowState& state, double kappa) {
  if (!state.alive) throw LifecycleError("forward boundary martingale on a swallowed state");
  if (!(kappa > 4.0 && kappa < 8.0)) throw DomainError("boundary martingale needs kappa in (4, 8)");
  if (state.w.imag() != 0.0 || state.w.real() <= 0.0) {
    throw DomainError("forward boundary martingale needs a real point right of the hull");
  }
  const double d_hat = 2.0 - 8.0 / kappa;
  return std::pow(state.w.real() / state.dw.real(), d_hat - 1.0);
}

double McResult::exclusion_rate() const {
  const auto total = n_paths + excluded;
  return total == 0 ? 0.0 : static_cast<double>(excluded) / static_cast<double>(total);
}

namespace {

bool boundary_quantity(MartingaleQuantity q) {
  return q == MartingaleQuantity::ReverseExpBoundary || q == MartingaleQuantity::ForwardBoundary;
}

struct PathTally {
  McAccumulator acc;
  std::uint64_t excluded = 0;
  void merge(const PathTally& other) {
    acc.merge(other.acc);
    excluded += other.excluded;
  }
};

/// Value of the experiment's quantity at time T on one path, or nothing when
/// the path is excluded.
std::optional<double> path_value(const MartingaleExperiment& e, const DriverPath& driver) {
  const std::size_t steps = driver.n_steps();
  switch (e.quantity) {
    case MartingaleQuantity::ReverseH:
      return mart_h(reverse_map(driver, e.z, steps), e.kappa);
    case MartingaleQuantity::ReverseExpBulk:
      return exp_martingale_bulk(reverse_map(driver, e.z, steps), e.exponent, e.kappa);
    case MartingaleQuantity::ReverseExpBoundary: {
      const FlowState s = reverse_map(driver, e.z, steps);
      if (s.w.imag() != 0.0) return std::nullopt;
      return exp_martingale_boundary(s, e.exponent, e.kappa);
    }
    case MartingaleQuantity::ForwardLength: {
      const FlowState s = forward_map(driver, e.z, steps);
      if (!s.alive) return std::nullopt;
      return forward_length_martingale(s, e.kappa);
    }
    case MartingaleQuantity::ForwardBoundary: {
      const FlowState s = forward_map(driver, e.z, steps);
      if (!s.alive) return std::nullopt;
      return forward_boundary_martingale(s, e.kappa);
    }
  }
  return std::nullopt;
}

}  // namespace

double martingale_target(const MartingaleExperiment& e) {
  if (!(e.kappa > 0.0)) throw ConfigError("kappa must be positive");
  const bool real_start = e.z.imag() == 0.0 && e.z.real() > 0.0;
  if (boundary_quantity(e.quantity) != real_start) {
    throw ConfigError(boundary_quantity(e.quantity)
                          ? "boundary quantities need a positive real start point"
                          : "bulk quantities need a start point with Im z > 0");
  }
  switch (e.quantity) {
    case MartingaleQuantity::ReverseH:
      return mart_h(FlowState{0.0, e.z, {1.0, 0.0}, true}, e.kappa);
    case MartingaleQuantity::ReverseExpBulk:
      return exp_martingale_initial(HalfPlanePoint(e.z), e.exponent, e.kappa);
    case MartingaleQuantity::ReverseExpBoundary:
      return std::pow(e.z.real(), 2.0 * e.exponent / std::sqrt(e.kappa));
    case MartingaleQuantity::ForwardLength:
      return natural_param_density(HalfPlanePoint(e.z), e.kappa);
    case MartingaleQuantity::ForwardBoundary:
      if (!(e.kappa > 4.0 && e.kappa < 8.0)) throw ConfigError("forward boundary martingale needs kappa in (4, 8)");
      return std::pow(e.z.real(), 1.0 - 8.0 / e.kappa);
  }
  throw ConfigError("unknown martingale quantity");
}

McResult mc_expectation(const MartingaleExperiment& e) {
  if (e.n_paths < 100) throw ConfigError("mc_expectation needs at least 100 paths");
  const double target = martingale_target(e);
  const PathTally tally = chunked_reduce<PathTally>(e.n_paths, e.workers, [&](std::size_t i, PathTally& t) {
    const DriverPath driver = sample_driver(e.kappa, e.T, e.dt, rng::derive_seed(e.master_seed, e.name, i));
    if (const auto v = path_value(e, driver)) {
      t.acc.add(*v);
    } else {
      ++t.excluded;
    }
  });
  McResult out;
  out.mean = tally.acc.mean();
  out.stderr_mean = tally.acc.standard_error();
  out.target = target;
  out.n_paths = tally.acc.count();
  out.excluded = tally.excluded;
  const double dev = out.mean - target;
  if (out.stderr_mean > 0.0) {
    out.z_score = dev / out.stderr_mean;
  } else {
    out.z_score = dev == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), dev);
  }
  return out;
}

OrderTest identity_order_test(const OrderExperiment& e) {
  if (e.n_paths == 0) throw ConfigError("order test needs at least one path");
  struct ErrPair {
    McAccumulator coarse;
    McAccumulator fine;
    void merge(const ErrPair& o) {
      coarse.merge(o.coarse);
      fine.merge(o.fine);
    }
  };
  auto error_of = [&](const DriverPath& d) {
    const FlowTrajectory traj = reverse_flow(d, e.z, e.y);
    return e.y ? pathwise_covariation_check(traj).abs_err : pathwise_qv_check(traj).abs_err;
  };
  const ErrPair errs = chunked_reduce<ErrPair>(e.n_paths, e.workers, [&](std::size_t i, ErrPair& acc) {
    const DriverPath coarse = sample_driver(e.kappa, e.T, e.dt, rng::derive_seed(e.master_seed, e.name, i));
    acc.coarse.add(error_of(coarse));
    acc.fine.add(error_of(refine_driver(coarse)));
  });
  OrderTest out;
  out.mean_err_coarse = errs.coarse.mean();
  out.mean_err_fine = errs.fine.mean();
  out.ratio = out.mean_err_coarse > 0.0 ? out.mean_err_fine / out.mean_err_coarse : 0.0;
  return out;
}

}  // namespace slelqg
