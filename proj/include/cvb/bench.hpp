// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef CVB_BENCH_HPP_
#define CVB_BENCH_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cvb/model.hpp"
#include "cvb/optimize.hpp"

namespace cvb {

// Restart metric: a restart succeeds when its final bound is within
// `threshold_nats` of the best known bound.  The average charges every
// restart's iterations but counts only successes, so it is empty (infinite)
// when nothing succeeded.
struct MethodSummary {
  std::string method;
  std::size_t restarts = 0;
  std::size_t successes = 0;
  std::size_t total_iterations = 0;
  std::optional<double> iterations_to_best;
  double best_bound = 0.0;
  std::vector<double> final_bounds;
};

MethodSummary iterations_to_best(const std::string& method,
                                 std::span<const std::size_t> iterations,
                                 std::span<const double> final_bounds,
                                 double best_known, double threshold_nats = 10.0);

struct RestartOutcome {
  std::uint64_t seed = 0;
  double final_bound = 0.0;
  Trace trace;
};

struct BenchmarkResult {
  std::vector<std::string> methods;
  // runs[m][i]: method m, restart i (seed order).
  std::vector<std::vector<RestartOutcome>> runs;
  std::vector<MethodSummary> summaries;
  double best_known = 0.0;
  double threshold_nats = 10.0;
};

using InitFactory = std::function<LogitTable(std::uint64_t seed)>;

// Runs every method from the same `restarts` initial states (seeds
// base_seed, base_seed + 1, ...).  Work is spread over `threads` workers;
// results are gathered in seed order so the outcome does not depend on the
// worker count.
BenchmarkResult run_benchmark(const CollapsedModel& model,
                              const std::vector<MethodSpec>& methods,
                              std::size_t restarts, std::uint64_t base_seed,
                              const OptimizerConfig& base_config,
                              double threshold_nats, const InitFactory& init,
                              std::size_t threads = 0);

}  // namespace cvb

#endif  // CVB_BENCH_HPP_
