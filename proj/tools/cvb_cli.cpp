// Apache License, Version 2.0, refer to LICENSE.txt

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvb/bench.hpp"
#include "cvb/data.hpp"
#include "cvb/graph.hpp"
#include "cvb/lda.hpp"
#include "cvb/mog.hpp"
#include "cvb/optimize.hpp"
#include "cvb/quant.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cvb;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::string config_path;
  std::string method = "vbem";
  std::string methods = "vbem,fr,hs";
  double tol = 1e-6;
  std::size_t max_iter = 5000;
  std::size_t restart_every = 0;
  std::uint64_t seed = 1;
  double init_sigma = 0.1;
  std::size_t restarts = 20;
  double threshold_nats = 10.0;
  std::size_t threads = 0;
  std::string out = ".";
};

struct MogOptions {
  std::string data;
  double R = 5.0;
  std::size_t n_per_cluster = 100;
  std::uint64_t data_seed = 1;
  std::size_t K = 8;
  std::optional<double> alpha, kappa0, nu0;
  std::vector<double> m0, S0;
};

struct LdaOptions {
  std::string docword, vocab;
  std::size_t docs = 50, vocab_size = 200, true_topics = 5, doc_len = 100;
  double gen_alpha = 0.1, gen_beta = 0.1;
  std::uint64_t data_seed = 1;
  std::size_t K = 5;
  double alpha = 0.1, beta = 0.1;
  std::size_t top_words = 10;
};

struct QuantOptions {
  std::string alignments;
  std::size_t transcripts = 50, reads = 5000, ambiguity = 3;
  double noise_sigma = 1.0;
  std::uint64_t data_seed = 1;
  double alpha0 = 1.0;
};

void add_run_options(CLI::App* app, RunOptions& o, bool bench) {
  app->add_option("--model-config", o.config_path, "JSON object of option values")
      ->check(CLI::ExistingFile);
  app->add_option("--tol", o.tol, "Convergence tolerance")->capture_default_str();
  app->add_option("--max-iter", o.max_iter, "Iteration cap")->capture_default_str();
  app->add_option("--restart-every", o.restart_every, "Conjugate restart period (0 = never)")
      ->capture_default_str();
  app->add_option("--seed", o.seed, "Seed of the initial state")->capture_default_str();
  app->add_option("--init-sigma", o.init_sigma, "Spread of the initial logits")
      ->capture_default_str();
  app->add_option("--out", o.out, "Output directory")->capture_default_str();
  if (bench) {
    app->add_option("--methods", o.methods, "Comma-separated methods")->capture_default_str();
    app->add_option("--restarts", o.restarts, "Restarts per method")->capture_default_str();
    app->add_option("--threshold-nats", o.threshold_nats, "Success threshold")
        ->capture_default_str();
    app->add_option("--threads", o.threads, "Worker threads (0 = all cores)")
        ->capture_default_str();
  } else {
    app->add_option("--method", o.method, "vbem, fr, pr or hs")->capture_default_str();
  }
}

void add_mog_options(CLI::App* app, MogOptions& o) {
  app->add_option("--data", o.data, "Points CSV; generated when absent");
  app->add_option("--R", o.R, "Cluster spacing of generated data")->capture_default_str();
  app->add_option("--n-per-cluster", o.n_per_cluster, "Generated points per cluster")
      ->capture_default_str();
  app->add_option("--data-seed", o.data_seed, "Seed of generated data")->capture_default_str();
  app->add_option("--K", o.K, "Mixture components")->capture_default_str();
  app->add_option("--alpha", o.alpha, "Dirichlet concentration");
  app->add_option("--kappa0", o.kappa0, "Prior mean precision scale");
  app->add_option("--nu0", o.nu0, "Prior Wishart degrees of freedom");
  app->add_option("--m0", o.m0, "Prior mean")->delimiter(',');
  app->add_option("--S0", o.S0, "Prior scale matrix, row major")->delimiter(',');
}

json config_object(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError(path + ": expected a JSON object");
  return j;
}

std::string config_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) {
      const auto part = config_value(e);
      s += (s.empty() ? "" : ",") + part;
    }
    return s;
  }
  return v.dump();
}

// Values from --model-config fill options not given on the command line.
void apply_config(CLI::App* app, const std::string& path) {
  if (path.empty()) return;
  const json j = config_object(path);
  for (const auto& [key, value] : j.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = app->get_option_no_throw("--" + name);
    if (opt == nullptr || name == "model-config") {
      throw UsageError(path + ": unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) opt->add_result("true");
    } else {
      opt->add_result(config_value(value));
    }
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(path + ": key '" + key + "': " + e.what());
    }
  }
}

MethodSpec method_spec(const std::string& name) {
  try {
    return parse_method(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

OptimizerConfig optimizer_config(const RunOptions& o, const std::string& method) {
  const auto spec = method_spec(method);
  OptimizerConfig c;
  c.method = spec.method;
  c.beta_rule = spec.rule;
  c.tol = o.tol;
  c.max_iter = o.max_iter;
  c.restart_every = o.restart_every;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

json run_echo(const RunOptions& o, bool bench) {
  json j{{"tol", o.tol},       {"max_iter", o.max_iter}, {"restart_every", o.restart_every},
         {"seed", o.seed},     {"init_sigma", o.init_sigma}};
  if (bench) {
    j["methods"] = o.methods;
    j["restarts"] = o.restarts;
    j["threshold_nats"] = o.threshold_nats;
  } else {
    j["method"] = o.method;
  }
  return j;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace(const fs::path& p, const Trace& t) {
  auto f = open_out(p);
  f << "iter,bound,grad_norm,beta,accepted,elapsed_ms\n";
  for (const auto& r : t.records) {
    f << r.iter << ',' << num(r.bound) << ',' << num(r.grad_norm) << ',' << num(r.beta) << ','
      << (r.accepted ? 1 : 0) << ',' << num(r.elapsed_ms) << '\n';
  }
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Fits one model and writes trace.csv and summary.json; returns the summary
// so the caller can add posterior parameters.
template <class Model>
std::pair<RunResult, json> fit_and_trace(const Model& model, const RunOptions& o, json echo) {
  const auto cfg = optimizer_config(o, o.method);
  fs::create_directories(o.out);
  const auto fit = run(model, random_init(model.layout(), o.seed, o.init_sigma), cfg);
  write_trace(fs::path(o.out) / "trace.csv", fit.trace);
  const auto& recs = fit.trace.records;
  const double final_bound = recs.empty() ? fit.trace.initial_bound : recs.back().bound;
  json summary{{"method", method_name(parse_method(o.method))},
               {"final_bound", final_bound},
               {"initial_bound", fit.trace.initial_bound},
               {"iterations", recs.size()},
               {"converged", fit.trace.converged},
               {"hit_max_iter", fit.trace.hit_max_iter},
               {"config", std::move(echo)},
               {"timing", {{"elapsed_ms", recs.empty() ? 0.0 : recs.back().elapsed_ms}}}};
  std::cout << summary["method"].get<std::string>() << ": bound " << num(final_bound) << " after "
            << recs.size() << " iterations"
            << (fit.trace.converged ? " (converged)" : " (iteration cap reached)") << '\n';
  return {fit, summary};
}

MogModel build_mog(const MogOptions& o, json& echo) {
  MogData data;
  if (!o.data.empty()) {
    data = load_points_csv(o.data);
    echo["data"] = o.data;
  } else {
    data = generate_mog({o.R, o.n_per_cluster, o.data_seed});
    echo["data"] = {{"R", o.R}, {"n_per_cluster", o.n_per_cluster}, {"data_seed", o.data_seed}};
  }
  MogPriors p = default_mog_priors(data, o.K);
  const auto D = static_cast<Eigen::Index>(data.dim());
  if (o.alpha) p.alpha = *o.alpha;
  if (o.kappa0) p.gw0.kappa = *o.kappa0;
  if (o.nu0) p.gw0.nu = *o.nu0;
  if (!o.m0.empty()) {
    if (static_cast<Eigen::Index>(o.m0.size()) != D) throw UsageError("--m0 needs " + std::to_string(D) + " values");
    p.gw0.m = Eigen::Map<const Eigen::VectorXd>(o.m0.data(), D);
  }
  if (!o.S0.empty()) {
    if (static_cast<Eigen::Index>(o.S0.size()) != D * D) {
      throw UsageError("--S0 needs " + std::to_string(D * D) + " values");
    }
    p.gw0.S = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        o.S0.data(), D, D);
  }
  echo["priors"] = {{"K", p.K},
                    {"alpha", p.alpha},
                    {"m0", vector_json(p.gw0.m)},
                    {"kappa0", p.gw0.kappa},
                    {"nu0", p.gw0.nu},
                    {"S0", matrix_json(p.gw0.S)}};
  return MogModel(std::move(data), p);
}

void mog_fit(const RunOptions& ro, const MogOptions& mo) {
  json echo = run_echo(ro, false);
  const auto model = build_mog(mo, echo);
  auto [fit, summary] = fit_and_trace(model, ro, std::move(echo));
  const auto post = model.posterior(fit.state);
  json comps = json::array();
  for (std::size_t k = 0; k < post.components.size(); ++k) {
    const auto& c = post.components[k];
    comps.push_back({{"weight", post.alpha_k[k]},
                     {"m", vector_json(c.m)},
                     {"kappa", c.kappa},
                     {"nu", c.nu},
                     {"S", matrix_json(c.S)}});
  }
  summary["posterior"] = {{"alpha", post.alpha_k.concentration()}, {"components", comps}};
  write_json(fs::path(ro.out) / "summary.json", summary);
}

void mog_bench(const RunOptions& ro, const MogOptions& mo) {
  json echo = run_echo(ro, true);
  const auto model = build_mog(mo, echo);
  std::vector<MethodSpec> methods;
  std::stringstream list(ro.methods);
  for (std::string name; std::getline(list, name, ',');) {
    if (!name.empty()) methods.push_back(method_spec(name));
  }
  if (methods.empty()) throw UsageError("--methods is empty");
  if (ro.restarts == 0) throw UsageError("--restarts must be positive");
  if (!(ro.threshold_nats > 0.0)) throw UsageError("--threshold-nats must be positive");
  const auto base = optimizer_config(ro, "vbem");
  auto init = [&](std::uint64_t seed) { return random_init(model.layout(), seed, ro.init_sigma); };
  const auto result =
      run_benchmark(model, methods, ro.restarts, ro.seed, base, ro.threshold_nats, init, ro.threads);

  const fs::path out(ro.out);
  fs::create_directories(out / "traces");
  auto restarts_csv = open_out(out / "restarts.csv");
  restarts_csv << "method,seed,iterations,final_bound,success\n";
  json rows = json::array();
  std::cout << "best known bound " << num(result.best_known) << "\n";
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const auto& name = result.methods[m];
    for (const auto& r : result.runs[m]) {
      write_trace(out / "traces" / (name + "_seed" + std::to_string(r.seed) + ".csv"), r.trace);
      restarts_csv << name << ',' << r.seed << ',' << r.trace.records.size() << ','
                   << num(r.final_bound) << ','
                   << (r.final_bound >= result.best_known - result.threshold_nats ? 1 : 0) << '\n';
    }
    const auto& s = result.summaries[m];
    rows.push_back({{"method", s.method},
                    {"restarts", s.restarts},
                    {"successes", s.successes},
                    {"total_iterations", s.total_iterations},
                    {"iterations_to_best", s.iterations_to_best ? json(*s.iterations_to_best) : json()},
                    {"infinite", !s.iterations_to_best.has_value()},
                    {"best_bound", s.best_bound},
                    {"final_bounds", s.final_bounds}});
    std::cout << name << ": " << s.successes << '/' << s.restarts << " successes, iterations to best "
              << (s.iterations_to_best ? num(*s.iterations_to_best) : std::string("inf")) << '\n';
  }
  json summary{{"best_known", result.best_known},
               {"threshold_nats", result.threshold_nats},
               {"restarts", ro.restarts},
               {"methods", rows},
               {"config", echo}};
  write_json(out / "summary.json", summary);
}

void lda_fit(const RunOptions& ro, const LdaOptions& lo) {
  json echo = run_echo(ro, false);
  Corpus corpus;
  if (!lo.docword.empty()) {
    corpus = load_docword(lo.docword, lo.vocab);
    echo["data"] = {{"docword", lo.docword}, {"vocab", lo.vocab}};
  } else {
    corpus = generate_corpus(lo.true_topics, lo.docs, lo.vocab_size, lo.doc_len, lo.gen_alpha,
                             lo.gen_beta, lo.data_seed)
                 .corpus;
    echo["data"] = {{"docs", lo.docs},         {"vocab_size", lo.vocab_size},
                    {"true_topics", lo.true_topics}, {"doc_len", lo.doc_len},
                    {"gen_alpha", lo.gen_alpha}, {"gen_beta", lo.gen_beta},
                    {"data_seed", lo.data_seed}};
  }
  const LdaPriors priors{lo.alpha, lo.beta, lo.K};
  echo["priors"] = {{"K", lo.K}, {"alpha", lo.alpha}, {"beta", lo.beta}};
  const LdaModel model(std::move(corpus), priors);
  auto [fit, summary] = fit_and_trace(model, ro, std::move(echo));
  const auto post = model.posterior(fit.state);
  summary["posterior"] = {{"alpha_prime", matrix_json(post.alpha_prime)},
                          {"beta_prime", matrix_json(post.beta_prime)}};
  write_json(fs::path(ro.out) / "summary.json", summary);

  json topics = json::array();
  const auto& vocab = model.corpus().vocab;
  for (const auto& topic : lda_topics(post, lo.top_words)) {
    json words = json::array();
    for (const auto& w : topic) {
      json entry{{"word", w.word}, {"weight", w.weight}};
      if (!vocab.empty()) entry["token"] = vocab[w.word];
      words.push_back(entry);
    }
    topics.push_back(words);
  }
  write_json(fs::path(ro.out) / "topics.json", topics);
}

void quant_fit(const RunOptions& ro, const QuantOptions& qo) {
  json echo = run_echo(ro, false);
  AlignmentMatrix alignments;
  std::vector<double> truth;
  if (!qo.alignments.empty()) {
    alignments = load_alignments(qo.alignments);
    echo["data"] = qo.alignments;
  } else {
    auto g = generate_alignments(qo.transcripts, qo.reads, qo.ambiguity, qo.noise_sigma, qo.data_seed);
    alignments = std::move(g.alignments);
    truth = std::move(g.true_theta);
    echo["data"] = {{"transcripts", qo.transcripts}, {"reads", qo.reads},
                    {"ambiguity", qo.ambiguity},     {"noise_sigma", qo.noise_sigma},
                    {"data_seed", qo.data_seed}};
  }
  const auto M = alignments.num_transcripts;
  echo["priors"] = {{"alpha0", qo.alpha0}};
  const QuantModel model(alignments, QuantPrior::symmetric(M, qo.alpha0));
  auto [fit, summary] = fit_and_trace(model, ro, std::move(echo));
  const auto theta = model.posterior_theta(fit.state);
  summary["posterior"] = {{"alpha", theta.concentration()}};
  write_json(fs::path(ro.out) / "summary.json", summary);

  auto f = open_out(fs::path(ro.out) / "posterior.csv");
  f << "transcript,alpha,mean,sd" << (truth.empty() ? "" : ",true_theta") << '\n';
  const double a0 = theta.total();
  for (std::size_t m = 0; m < M; ++m) {
    const double mean = theta[m] / a0;
    f << m << ',' << num(theta[m]) << ',' << num(mean) << ','
      << num(std::sqrt(mean * (1.0 - mean) / (a0 + 1.0)));
    if (!truth.empty()) f << ',' << num(truth[m]);
    f << '\n';
  }
}

int dsep_check(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const auto q = parse_graph_query(in, path);
  const auto report = check_collapsible(q.graph, q.observed, q.parameterized, q.collapsed);
  std::cout << (report.collapsible ? "collapsible" : "not collapsible") << '\n';
  for (const auto& [a, b] : report.failing_pairs) std::cout << "  dependent: " << a << " -- " << b << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collapsed variational inference with natural conjugate gradients", "cvb"};
  app.require_subcommand(1);

  RunOptions ro;
  MogOptions mo;
  LdaOptions lo;
  QuantOptions qo;
  std::string graph_path;

  auto* mog = app.add_subcommand("mog", "Bayesian mixture of Gaussians")->require_subcommand(1);
  auto* mog_fit_cmd = mog->add_subcommand("fit", "Fit one run");
  auto* mog_bench_cmd = mog->add_subcommand("bench", "Multi-restart benchmark");
  add_run_options(mog_fit_cmd, ro, false);
  add_mog_options(mog_fit_cmd, mo);
  add_run_options(mog_bench_cmd, ro, true);
  add_mog_options(mog_bench_cmd, mo);

  auto* lda = app.add_subcommand("lda", "Latent Dirichlet allocation")->require_subcommand(1);
  auto* lda_fit_cmd = lda->add_subcommand("fit", "Fit one run");
  add_run_options(lda_fit_cmd, ro, false);
  lda_fit_cmd->add_option("--docword", lo.docword, "UCI docword file; generated when absent");
  lda_fit_cmd->add_option("--vocab", lo.vocab, "Vocabulary file");
  lda_fit_cmd->add_option("--docs", lo.docs, "Generated documents")->capture_default_str();
  lda_fit_cmd->add_option("--vocab-size", lo.vocab_size, "Generated vocabulary size")->capture_default_str();
  lda_fit_cmd->add_option("--true-topics", lo.true_topics, "Generating topics")->capture_default_str();
  lda_fit_cmd->add_option("--doc-len", lo.doc_len, "Tokens per generated document")->capture_default_str();
  lda_fit_cmd->add_option("--gen-alpha", lo.gen_alpha, "Generating document concentration")
      ->capture_default_str();
  lda_fit_cmd->add_option("--gen-beta", lo.gen_beta, "Generating topic concentration")->capture_default_str();
  lda_fit_cmd->add_option("--data-seed", lo.data_seed, "Seed of generated data")->capture_default_str();
  lda_fit_cmd->add_option("--K", lo.K, "Topics")->capture_default_str();
  lda_fit_cmd->add_option("--alpha", lo.alpha, "Document-topic prior")->capture_default_str();
  lda_fit_cmd->add_option("--beta", lo.beta, "Topic-word prior")->capture_default_str();
  lda_fit_cmd->add_option("--top-words", lo.top_words, "Words listed per topic")->capture_default_str();

  auto* quant = app.add_subcommand("quant", "Transcript quantification")->require_subcommand(1);
  auto* quant_fit_cmd = quant->add_subcommand("fit", "Fit one run");
  add_run_options(quant_fit_cmd, ro, false);
  quant_fit_cmd->add_option("--alignments", qo.alignments, "Alignment file; generated when absent");
  quant_fit_cmd->add_option("--transcripts", qo.transcripts, "Generated transcripts")->capture_default_str();
  quant_fit_cmd->add_option("--reads", qo.reads, "Generated reads")->capture_default_str();
  quant_fit_cmd->add_option("--ambiguity", qo.ambiguity, "Candidates per generated read")
      ->capture_default_str();
  quant_fit_cmd->add_option("--noise-sigma", qo.noise_sigma, "Alignment score noise")->capture_default_str();
  quant_fit_cmd->add_option("--data-seed", qo.data_seed, "Seed of generated data")->capture_default_str();
  quant_fit_cmd->add_option("--alpha0", qo.alpha0, "Symmetric abundance prior")->capture_default_str();

  auto* dsep = app.add_subcommand("dsep", "Graph collapsibility")->require_subcommand(1);
  auto* dsep_check_cmd = dsep->add_subcommand("check", "Check a graph description");
  dsep_check_cmd->add_option("graph", graph_path, "Graph file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (dsep_check_cmd->parsed()) return dsep_check(graph_path);
    for (auto* cmd : {mog_fit_cmd, mog_bench_cmd, lda_fit_cmd, quant_fit_cmd}) {
      if (cmd->parsed()) apply_config(cmd, ro.config_path);
    }
    if (mog_fit_cmd->parsed()) mog_fit(ro, mo);
    if (mog_bench_cmd->parsed()) mog_bench(ro, mo);
    if (lda_fit_cmd->parsed()) lda_fit(ro, lo);
    if (quant_fit_cmd->parsed()) quant_fit(ro, qo);
  } catch (const UsageError& e) {
    std::cerr << "cvb: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cvb: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
