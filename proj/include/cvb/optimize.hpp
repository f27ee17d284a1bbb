// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef CVB_OPTIMIZE_HPP_
#define CVB_OPTIMIZE_HPP_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvb/expfam.hpp"
#include "cvb/model.hpp"

namespace cvb {

enum class Method { vbem, ncg };
enum class BetaRule { fletcher_reeves, polak_ribiere, hestenes_stiefel };

// Accepts "vbem", "fr", "pr", "hs" (and the long rule names).
struct MethodSpec {
  Method method = Method::vbem;
  BetaRule rule = BetaRule::fletcher_reeves;
};
MethodSpec parse_method(const std::string& name);
std::string method_name(const MethodSpec& spec);

struct OptimizerConfig {
  Method method = Method::vbem;
  BetaRule beta_rule = BetaRule::fletcher_reeves;
  double tol = 1e-6;
  std::size_t max_iter = 5000;
  // Restart the conjugate direction every n iterations (0 = never).  A
  // negative beta always restarts.
  std::size_t restart_every = 0;

  void validate() const;
};

struct TraceRecord {
  std::size_t iter = 0;
  double bound = 0.0;      // after the step
  double grad_norm = 0.0;  // sqrt(g_nat . g_ord) before the step
  double beta = 0.0;
  bool accepted = true;    // false when a conjugate candidate was rejected
  bool beta_clamped = false;
  double elapsed_ms = 0.0;
};

struct Trace {
  std::vector<TraceRecord> records;
  double initial_bound = 0.0;
  bool converged = false;
  bool hit_max_iter = false;
};

// Raised when a natural-gradient step lowers the bound, which indicates an
// inconsistent model gradient.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Riemannian inner product under the Fisher metric: with a = G^{-1} x on the
// natural side and b = G y on the ordinary side, <x, y>_G = a . b.
double riemannian_inner(std::span<const double> a_natural,
                        std::span<const double> b_ordinary);

struct BetaValue {
  double beta = 0.0;
  bool clamped = false;  // raw value was negative or undefined
};

BetaValue compute_beta(BetaRule rule, std::span<const double> g_nat,
                       std::span<const double> g_ord,
                       std::span<const double> g_nat_prev,
                       std::span<const double> g_ord_prev);

// One unit natural-gradient step rho <- rho + g_nat.  Throws
// ConsistencyError if the bound drops by more than 1e-9.
LogitTable vbem_step(const CollapsedModel& model, const LogitTable& state);

// Conjugate-direction memory carried between iterations.
struct NcgMemory {
  std::vector<double> g_nat;
  std::vector<double> g_ord;
  std::vector<double> direction;
  std::size_t since_restart = 0;

  bool empty() const { return direction.empty(); }
};

struct StepResult {
  LogitTable state;
  double bound = 0.0;
  double grad_norm = 0.0;
  double beta = 0.0;
  bool accepted = true;
  bool beta_clamped = false;
};

// One natural conjugate-gradient step with unit step length along
// s = g_nat + beta * s_prev.  If the candidate lowers the bound the step
// falls back to beta = 0, the plain natural-gradient step.
StepResult ncg_step(const CollapsedModel& model, const LogitTable& state,
                    NcgMemory& memory, BetaRule rule,
                    std::size_t restart_every = 0);

struct RunResult {
  LogitTable state;
  Trace trace;
};

// Iterates until |delta bound| < tol or sqrt(g_nat . g_ord) < tol, or
// max_iter steps.
RunResult run(const CollapsedModel& model, const LogitTable& init,
              const OptimizerConfig& config);

}  // namespace cvb

#endif  // CVB_OPTIMIZE_HPP_
