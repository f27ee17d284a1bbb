// Apache License, Version 2.0, refer to LICENSE.txt

#include "cvb/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace cvb {

namespace {

// Allowed round-off when checking that a natural-gradient step is an ascent.
double ascent_slack(double bound) { return 1e-9 * std::max(1.0, std::abs(bound)); }

double evaluate_or_nan(const CollapsedModel& model, const LogitTable& state) {
  try {
    return model.bound(state);
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

StepResult natural_step(const CollapsedModel& model, const LogitTable& state,
                        double current_bound, const GradientPair& g) {
  StepResult out;
  out.state = state.shifted(g.natural, 1.0).recentered();
  out.bound = model.bound(out.state);
  if (!(out.bound >= current_bound - ascent_slack(current_bound))) {
    throw ConsistencyError("natural-gradient step decreased the bound from " +
                           std::to_string(current_bound) + " to " +
                           std::to_string(out.bound));
  }
  return out;
}

double gradient_norm(const GradientPair& g) {
  return std::sqrt(std::max(0.0, riemannian_inner(g.natural, g.ordinary)));
}

StepResult ncg_step_at(const CollapsedModel& model, const LogitTable& state,
                       double current_bound, NcgMemory& memory, BetaRule rule,
                       std::size_t restart_every) {
  const GradientPair g = model.gradients(state);

  BetaValue beta;
  const bool restart_due = restart_every > 0 && memory.since_restart >= restart_every;
  if (!memory.empty() && !restart_due) {
    beta = compute_beta(rule, g.natural, g.ordinary, memory.g_nat, memory.g_ord);
  }

  StepResult out;
  std::vector<double> direction = g.natural;
  bool conjugate = false;
  if (beta.beta != 0.0) {
    for (std::size_t i = 0; i < direction.size(); ++i) {
      direction[i] += beta.beta * memory.direction[i];
    }
    const LogitTable candidate = state.shifted(direction, 1.0).recentered();
    const double value = evaluate_or_nan(model, candidate);
    if (std::isfinite(value) && value >= current_bound) {
      out.state = candidate;
      out.bound = value;
      conjugate = true;
    }
  }

  if (!conjugate) {
    const bool rejected = beta.beta != 0.0;
    out = natural_step(model, state, current_bound, g);
    out.accepted = !rejected;
    direction = g.natural;
    beta.beta = 0.0;
  }

  out.grad_norm = gradient_norm(g);
  out.beta = beta.beta;
  out.beta_clamped = beta.clamped;
  memory.since_restart = out.beta == 0.0 ? 1 : memory.since_restart + 1;
  memory.g_nat = g.natural;
  memory.g_ord = g.ordinary;
  memory.direction = std::move(direction);
  return out;
}

}  // namespace

MethodSpec parse_method(const std::string& name) {
  if (name == "vbem") return {Method::vbem, BetaRule::fletcher_reeves};
  if (name == "fr" || name == "fletcher_reeves") return {Method::ncg, BetaRule::fletcher_reeves};
  if (name == "pr" || name == "polak_ribiere" || name == "polack_ribiere") {
    return {Method::ncg, BetaRule::polak_ribiere};
  }
  if (name == "hs" || name == "hestenes_stiefel") return {Method::ncg, BetaRule::hestenes_stiefel};
  throw std::invalid_argument("unknown method '" + name + "' (expected vbem, fr, pr or hs)");
}

std::string method_name(const MethodSpec& spec) {
  if (spec.method == Method::vbem) return "vbem";
  switch (spec.rule) {
    case BetaRule::fletcher_reeves: return "fr";
    case BetaRule::polak_ribiere: return "pr";
    case BetaRule::hestenes_stiefel: return "hs";
  }
  return "?";
}

void OptimizerConfig::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("OptimizerConfig: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("OptimizerConfig: max_iter must be at least 1");
}

double riemannian_inner(std::span<const double> a_natural,
                        std::span<const double> b_ordinary) {
  if (a_natural.size() != b_ordinary.size()) {
    throw std::invalid_argument("riemannian_inner: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a_natural.size(); ++i) acc += a_natural[i] * b_ordinary[i];
  return acc;
}

BetaValue compute_beta(BetaRule rule, std::span<const double> g_nat,
                       std::span<const double> g_ord,
                       std::span<const double> g_nat_prev,
                       std::span<const double> g_ord_prev) {
  const std::size_t n = g_nat.size();
  if (g_ord.size() != n || g_nat_prev.size() != n || g_ord_prev.size() != n) {
    throw std::invalid_argument("compute_beta: length mismatch");
  }
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = g_nat[i] - g_nat_prev[i];

  double num = 0.0;
  double den = 0.0;
  switch (rule) {
    case BetaRule::fletcher_reeves:
      num = riemannian_inner(g_nat, g_ord);
      den = riemannian_inner(g_nat_prev, g_ord_prev);
      break;
    case BetaRule::polak_ribiere:
      num = riemannian_inner(diff, g_ord);
      den = riemannian_inner(g_nat_prev, g_ord_prev);
      break;
    case BetaRule::hestenes_stiefel:
      num = riemannian_inner(diff, g_ord);
      den = riemannian_inner(diff, g_ord_prev);
      break;
  }
  if (den == 0.0 || !std::isfinite(num) || !std::isfinite(den)) return {0.0, true};
  const double raw = num / den;
  if (raw < 0.0) return {0.0, true};
  return {raw, false};
}

LogitTable vbem_step(const CollapsedModel& model, const LogitTable& state) {
  const double current = model.bound(state);
  return natural_step(model, state, current, model.gradients(state)).state;
}

StepResult ncg_step(const CollapsedModel& model, const LogitTable& state,
                    NcgMemory& memory, BetaRule rule, std::size_t restart_every) {
  return ncg_step_at(model, state, model.bound(state), memory, rule, restart_every);
}

RunResult run(const CollapsedModel& model, const LogitTable& init,
              const OptimizerConfig& config) {
  config.validate();
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();

  RunResult result;
  result.state = init;
  double current = model.bound(init);
  result.trace.initial_bound = current;
  NcgMemory memory;

  for (std::size_t it = 1; it <= config.max_iter; ++it) {
    StepResult step;
    if (config.method == Method::vbem) {
      const GradientPair g = model.gradients(result.state);
      step = natural_step(model, result.state, current, g);
      step.grad_norm = gradient_norm(g);
    } else {
      step = ncg_step_at(model, result.state, current, memory, config.beta_rule,
                         config.restart_every);
    }

    TraceRecord rec;
    rec.iter = it;
    rec.bound = step.bound;
    rec.grad_norm = step.grad_norm;
    rec.beta = step.beta;
    rec.accepted = step.accepted;
    rec.beta_clamped = step.beta_clamped;
    rec.elapsed_ms =
        std::chrono::duration<double, std::milli>(clock::now() - start).count();
    result.trace.records.push_back(rec);

    const double change = std::abs(step.bound - current);
    result.state = std::move(step.state);
    current = step.bound;
    if (change < config.tol || step.grad_norm < config.tol) {
      result.trace.converged = true;
      return result;
    }
  }
  result.trace.hit_max_iter = true;
  return result;
}

}  // namespace cvb
