// Apache License, Version 2.0, refer to LICENSE.txt

#include "cvb/lda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace cvb {

namespace {

void check_rows(const LogitTable& state, const Corpus& corpus, std::size_t K) {
  if (state.rows() != corpus.cells.size() || state.layout().uniform_width() != K) {
    throw std::invalid_argument("lda: state must have one K-wide row per corpus cell");
  }
}

double row_entropy(std::span<const double> r, std::span<const double> log_r) {
  double h = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) h -= r[k] * log_r[k];
  return h;
}

double ln_dirichlet_norm_row(const Eigen::MatrixXd& m, Eigen::Index row) {
  double total = 0.0;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    total += m(row, j);
    acc += ln_gamma(m(row, j));
  }
  return ln_gamma(total) - acc;
}

DirichletParams row_params(const Eigen::MatrixXd& m, Eigen::Index row) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) v[static_cast<std::size_t>(j)] = m(row, j);
  return DirichletParams(std::move(v));
}

// E[ln x_j] for each row of a matrix of Dirichlet concentrations.
Eigen::MatrixXd expected_log_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double psi_total = digamma(m.row(i).sum());
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = digamma(m(i, j)) - psi_total;
  }
  return out;
}

}  // namespace

void Corpus::validate() const {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& c : cells) {
    if (c.count == 0) throw std::invalid_argument("Corpus: zero count cell");
    if (c.doc >= num_docs || c.word >= vocab_size) {
      throw std::invalid_argument("Corpus: document or word id out of range");
    }
    if (!seen.emplace(c.doc, c.word).second) {
      throw std::invalid_argument("Corpus: repeated (document, word) cell");
    }
  }
  if (!vocab.empty() && vocab.size() != vocab_size) {
    throw std::invalid_argument("Corpus: vocabulary size mismatch");
  }
}

std::vector<double> Corpus::doc_lengths() const {
  std::vector<double> n(num_docs, 0.0);
  for (const auto& c : cells) n[c.doc] += c.count;
  return n;
}

double Corpus::total_tokens() const {
  double acc = 0.0;
  for (const auto& c : cells) acc += c.count;
  return acc;
}

void LdaPriors::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw std::invalid_argument("LdaPriors: alpha and beta must be positive");
  }
  if (K < 1) throw std::invalid_argument("LdaPriors: K must be at least 1");
}

LdaPosterior lda_posterior(const LdaPriors& priors, const Corpus& corpus,
                           const LogitTable& state) {
  const std::size_t K = priors.K;
  check_rows(state, corpus, K);
  LdaPosterior p;
  p.alpha_prime = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(corpus.num_docs),
                                            static_cast<Eigen::Index>(K), priors.alpha);
  p.beta_prime = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(K),
                                           static_cast<Eigen::Index>(corpus.vocab_size),
                                           priors.beta);
  for (std::size_t i = 0; i < corpus.cells.size(); ++i) {
    const auto& cell = corpus.cells[i];
    const auto r = state.r_row(i);
    const auto d = static_cast<Eigen::Index>(cell.doc);
    const auto v = static_cast<Eigen::Index>(cell.word);
    for (std::size_t k = 0; k < K; ++k) {
      const double mass = cell.count * r[k];
      const auto kk = static_cast<Eigen::Index>(k);
      p.alpha_prime(d, kk) += mass;
      p.beta_prime(kk, v) += mass;
    }
  }
  return p;
}

double lda_bound(const LdaPriors& priors, const Corpus& corpus,
                 const LogitTable& state) {
  const auto post = lda_posterior(priors, corpus, state);
  const std::size_t K = priors.K;
  const double D = static_cast<double>(corpus.num_docs);

  double value = D * ln_dirichlet_norm(DirichletParams::symmetric(K, priors.alpha));
  for (Eigen::Index d = 0; d < post.alpha_prime.rows(); ++d) {
    value -= ln_dirichlet_norm_row(post.alpha_prime, d);
  }
  value += static_cast<double>(K) *
           ln_dirichlet_norm(DirichletParams::symmetric(corpus.vocab_size, priors.beta));
  for (Eigen::Index k = 0; k < post.beta_prime.rows(); ++k) {
    value -= ln_dirichlet_norm_row(post.beta_prime, k);
  }
  for (std::size_t i = 0; i < corpus.cells.size(); ++i) {
    value += corpus.cells[i].count * row_entropy(state.r_row(i), state.log_r_row(i));
  }
  return value;
}

GradientPair lda_gradient(const LdaPriors& priors, const Corpus& corpus,
                          const LogitTable& state) {
  const auto post = lda_posterior(priors, corpus, state);
  const std::size_t K = priors.K;
  const auto doc_term = expected_log_rows(post.alpha_prime);
  const auto word_term = expected_log_rows(post.beta_prime);

  // The natural gradient is taken per token: a cell's shared row carries
  // `count` identical tokens, so the Fisher block and the ordinary gradient
  // both scale by count while the natural gradient does not.
  GradientPair g;
  g.natural.resize(state.size());
  for (std::size_t i = 0; i < corpus.cells.size(); ++i) {
    const auto& cell = corpus.cells[i];
    const auto log_r = state.log_r_row(i);
    const auto d = static_cast<Eigen::Index>(cell.doc);
    const auto v = static_cast<Eigen::Index>(cell.word);
    for (std::size_t k = 0; k < K; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      g.natural[i * K + k] = doc_term(d, kk) + word_term(kk, v) - log_r[k] - 1.0;
    }
  }
  g.ordinary = softmax_chain(state.layout(), state.r(), g.natural);
  for (std::size_t i = 0; i < corpus.cells.size(); ++i) {
    const double c = corpus.cells[i].count;
    for (std::size_t k = 0; k < K; ++k) g.ordinary[i * K + k] *= c;
  }
  return g;
}

std::vector<std::vector<TopicWord>> lda_topics(const LdaPosterior& posterior,
                                               std::size_t top_n) {
  const auto& b = posterior.beta_prime;
  const std::size_t V = static_cast<std::size_t>(b.cols());
  const std::size_t n = std::min(top_n, V);
  std::vector<std::vector<TopicWord>> topics;
  for (Eigen::Index k = 0; k < b.rows(); ++k) {
    std::vector<std::size_t> order(V);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      return b(k, static_cast<Eigen::Index>(x)) > b(k, static_cast<Eigen::Index>(y));
    });
    const double total = b.row(k).sum();
    std::vector<TopicWord> words;
    for (std::size_t j = 0; j < n; ++j) {
      words.push_back({order[j], b(k, static_cast<Eigen::Index>(order[j])) / total});
    }
    topics.push_back(std::move(words));
  }
  return topics;
}

// ---------------------------------------------------------------------------

LdaModel::LdaModel(Corpus corpus, LdaPriors priors)
    : corpus_(std::move(corpus)), priors_(priors) {
  corpus_.validate();
  priors_.validate();
  if (corpus_.num_docs == 0 || corpus_.vocab_size == 0) {
    throw std::invalid_argument("LdaModel: empty corpus");
  }
  layout_ = RowLayout::dense(corpus_.cells.size(), priors_.K);
}

double LdaModel::bound(const LogitTable& state) const {
  check_state(state);
  return lda_bound(priors_, corpus_, state);
}

GradientPair LdaModel::gradients(const LogitTable& state) const {
  check_state(state);
  return lda_gradient(priors_, corpus_, state);
}

LdaPosterior LdaModel::posterior(const LogitTable& state) const {
  check_state(state);
  return lda_posterior(priors_, corpus_, state);
}

double LdaModel::mean_field(const LogitTable& state, const LogitTable& aux) const {
  check_state(state);
  const auto q = posterior(aux);
  const auto doc_term = expected_log_rows(q.alpha_prime);
  const auto word_term = expected_log_rows(q.beta_prime);
  const std::size_t K = priors_.K;

  double value = 0.0;
  for (std::size_t i = 0; i < corpus_.cells.size(); ++i) {
    const auto& cell = corpus_.cells[i];
    const auto r = state.r_row(i);
    const auto d = static_cast<Eigen::Index>(cell.doc);
    const auto v = static_cast<Eigen::Index>(cell.word);
    double row = row_entropy(r, state.log_r_row(i));
    for (std::size_t k = 0; k < K; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      row += r[k] * (doc_term(d, kk) + word_term(kk, v));
    }
    value += cell.count * row;
  }

  const auto doc_prior = DirichletParams::symmetric(K, priors_.alpha);
  for (Eigen::Index d = 0; d < q.alpha_prime.rows(); ++d) {
    value -= kl_dirichlet(row_params(q.alpha_prime, d), doc_prior);
  }
  const auto word_prior = DirichletParams::symmetric(corpus_.vocab_size, priors_.beta);
  for (Eigen::Index k = 0; k < q.beta_prime.rows(); ++k) {
    value -= kl_dirichlet(row_params(q.beta_prime, k), word_prior);
  }
  return value;
}

double LdaModel::posterior_kl(const LogitTable& state, const LogitTable& aux) const {
  const auto p = posterior(aux);
  const auto q = posterior(state);
  double kl = 0.0;
  for (Eigen::Index d = 0; d < p.alpha_prime.rows(); ++d) {
    kl += kl_dirichlet(row_params(p.alpha_prime, d), row_params(q.alpha_prime, d));
  }
  for (Eigen::Index k = 0; k < p.beta_prime.rows(); ++k) {
    kl += kl_dirichlet(row_params(p.beta_prime, k), row_params(q.beta_prime, k));
  }
  return kl;
}

}  // namespace cvb
