// Apache License, Version 2.0, refer to LICENSE.txt

#include "cvb/bench.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace cvb {

MethodSummary iterations_to_best(const std::string& method,
                                 std::span<const std::size_t> iterations,
                                 std::span<const double> final_bounds,
                                 double best_known, double threshold_nats) {
  if (iterations.size() != final_bounds.size() || iterations.empty()) {
    throw std::invalid_argument("iterations_to_best: need one bound per restart");
  }
  if (!(threshold_nats > 0.0)) {
    throw std::invalid_argument("iterations_to_best: threshold must be positive");
  }
  MethodSummary s;
  s.method = method;
  s.restarts = iterations.size();
  s.final_bounds.assign(final_bounds.begin(), final_bounds.end());
  s.best_bound = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < iterations.size(); ++i) {
    s.total_iterations += iterations[i];
    s.best_bound = std::max(s.best_bound, final_bounds[i]);
    if (final_bounds[i] >= best_known - threshold_nats) ++s.successes;
  }
  if (s.successes > 0) {
    s.iterations_to_best =
        static_cast<double>(s.total_iterations) / static_cast<double>(s.successes);
  }
  return s;
}

BenchmarkResult run_benchmark(const CollapsedModel& model,
                              const std::vector<MethodSpec>& methods,
                              std::size_t restarts, std::uint64_t base_seed,
                              const OptimizerConfig& base_config,
                              double threshold_nats, const InitFactory& init,
                              std::size_t threads) {
  if (methods.empty() || restarts == 0) {
    throw std::invalid_argument("run_benchmark: need at least one method and restart");
  }
  BenchmarkResult result;
  result.threshold_nats = threshold_nats;
  for (const auto& m : methods) result.methods.push_back(method_name(m));
  result.runs.assign(methods.size(), std::vector<RestartOutcome>(restarts));

  const std::size_t jobs = methods.size() * restarts;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t job = next++; job < jobs; job = next++) {
      const std::size_t m = job / restarts;
      const std::size_t i = job % restarts;
      try {
        OptimizerConfig config = base_config;
        config.method = methods[m].method;
        config.beta_rule = methods[m].rule;
        const std::uint64_t seed = base_seed + i;
        auto fit = run(model, init(seed), config);
        auto& out = result.runs[m][i];
        out.seed = seed;
        out.final_bound = fit.trace.records.empty() ? fit.trace.initial_bound
                                                    : fit.trace.records.back().bound;
        out.trace = std::move(fit.trace);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  result.best_known = -std::numeric_limits<double>::infinity();
  for (const auto& per_method : result.runs) {
    for (const auto& r : per_method) result.best_known = std::max(result.best_known, r.final_bound);
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<std::size_t> iters;
    std::vector<double> bounds;
    for (const auto& r : result.runs[m]) {
      iters.push_back(r.trace.records.size());
      bounds.push_back(r.final_bound);
    }
    result.summaries.push_back(iterations_to_best(result.methods[m], iters, bounds,
                                                  result.best_known, threshold_nats));
  }
  return result;
}

}  // namespace cvb
