// Apache License, Version 2.0, refer to LICENSE.txt

#include "cvb/quant.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace cvb {

namespace {

void check_support(const QuantPrior& prior, const ReadSupport& support,
                   const LogitTable& state) {
  if (prior.alpha0.size() != support.num_transcripts) {
    throw std::invalid_argument("quant: prior length does not match transcript count");
  }
  if (!(state.layout() == support.layout)) {
    throw std::invalid_argument("quant: state layout does not match read support");
  }
}

}  // namespace

void AlignmentMatrix::validate() const {
  std::vector<char> has_entry(num_reads, 0);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& a : entries) {
    if (a.read >= num_reads || a.transcript >= num_transcripts) {
      throw std::invalid_argument("AlignmentMatrix: id out of range (read " +
                                  std::to_string(a.read) + ", transcript " +
                                  std::to_string(a.transcript) + ")");
    }
    if (!std::isfinite(a.log_lik)) {
      throw std::invalid_argument("AlignmentMatrix: non-finite log-likelihood for read " +
                                  std::to_string(a.read));
    }
    if (!seen.emplace(a.read, a.transcript).second) {
      throw std::invalid_argument("AlignmentMatrix: repeated alignment of read " +
                                  std::to_string(a.read) + " to transcript " +
                                  std::to_string(a.transcript));
    }
    has_entry[a.read] = 1;
  }
  for (std::size_t n = 0; n < num_reads; ++n) {
    if (!has_entry[n]) {
      throw std::invalid_argument("AlignmentMatrix: read " + std::to_string(n) +
                                  " has no candidate transcripts");
    }
  }
}

QuantPrior QuantPrior::symmetric(std::size_t num_transcripts, double alpha) {
  return QuantPrior{std::vector<double>(num_transcripts, alpha)};
}

double QuantPrior::total() const {
  return std::accumulate(alpha0.begin(), alpha0.end(), 0.0);
}

void QuantPrior::validate() const {
  for (double a : alpha0) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw std::invalid_argument("QuantPrior: concentrations must be positive");
    }
  }
}

ReadSupport build_read_support(const AlignmentMatrix& alignments) {
  alignments.validate();
  std::vector<std::size_t> widths(alignments.num_reads, 0);
  for (const auto& a : alignments.entries) ++widths[a.read];

  ReadSupport s;
  s.layout = RowLayout::ragged(widths);
  s.num_transcripts = alignments.num_transcripts;
  s.transcript.resize(s.layout.size());
  s.log_lik.resize(s.layout.size());
  std::vector<std::size_t> fill(alignments.num_reads, 0);
  for (const auto& a : alignments.entries) {
    const std::size_t at = s.layout.offset(a.read) + fill[a.read]++;
    s.transcript[at] = a.transcript;
    s.log_lik[at] = a.log_lik;
  }
  return s;
}

std::vector<double> expected_counts(const ReadSupport& support,
                                    const LogitTable& state) {
  std::vector<double> counts(support.num_transcripts, 0.0);
  const auto phi = state.r();
  for (std::size_t i = 0; i < phi.size(); ++i) counts[support.transcript[i]] += phi[i];
  return counts;
}

double quant_bound(const QuantPrior& prior, const ReadSupport& support,
                   const LogitTable& state) {
  check_support(prior, support, state);
  const auto phi = state.r();
  const auto log_phi = state.log_r();
  double value = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    value += phi[i] * (support.log_lik[i] - log_phi[i]);
  }
  const double N = static_cast<double>(support.layout.rows());
  const double total = prior.total();
  value += ln_gamma(total) - ln_gamma(total + N);
  const auto counts = expected_counts(support, state);
  for (std::size_t m = 0; m < counts.size(); ++m) {
    value -= ln_gamma(prior.alpha0[m]) - ln_gamma(prior.alpha0[m] + counts[m]);
  }
  return value;
}

GradientPair quant_gradient(const QuantPrior& prior, const ReadSupport& support,
                            const LogitTable& state) {
  check_support(prior, support, state);
  const auto counts = expected_counts(support, state);
  std::vector<double> psi(counts.size());
  for (std::size_t m = 0; m < counts.size(); ++m) {
    psi[m] = digamma(prior.alpha0[m] + counts[m]);
  }
  const auto log_phi = state.log_r();
  GradientPair g;
  g.natural.resize(state.size());
  for (std::size_t i = 0; i < g.natural.size(); ++i) {
    g.natural[i] = support.log_lik[i] - log_phi[i] - 1.0 + psi[support.transcript[i]];
  }
  g.ordinary = softmax_chain(state.layout(), state.r(), g.natural);
  return g;
}

DirichletParams quant_posterior_theta(const QuantPrior& prior,
                                      const ReadSupport& support,
                                      const LogitTable& state) {
  check_support(prior, support, state);
  auto conc = expected_counts(support, state);
  for (std::size_t m = 0; m < conc.size(); ++m) conc[m] += prior.alpha0[m];
  return DirichletParams(std::move(conc));
}

// ---------------------------------------------------------------------------

QuantModel::QuantModel(const AlignmentMatrix& alignments, QuantPrior prior)
    : support_(build_read_support(alignments)), prior_(std::move(prior)) {
  prior_.validate();
  if (prior_.alpha0.size() != alignments.num_transcripts) {
    throw std::invalid_argument("QuantModel: prior length does not match transcript count");
  }
}

double QuantModel::bound(const LogitTable& state) const {
  return quant_bound(prior_, support_, state);
}

GradientPair QuantModel::gradients(const LogitTable& state) const {
  return quant_gradient(prior_, support_, state);
}

DirichletParams QuantModel::posterior_theta(const LogitTable& state) const {
  return quant_posterior_theta(prior_, support_, state);
}

double QuantModel::mean_field(const LogitTable& state, const LogitTable& aux) const {
  check_state(state);
  const auto q = posterior_theta(aux);
  const auto e_log_theta = dirichlet_expected_log(q);
  const auto phi = state.r();
  const auto log_phi = state.log_r();
  double value = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    value += phi[i] * (support_.log_lik[i] + e_log_theta[support_.transcript[i]] -
                       log_phi[i]);
  }
  value -= kl_dirichlet(q, DirichletParams(prior_.alpha0));
  return value;
}

double QuantModel::posterior_kl(const LogitTable& state, const LogitTable& aux) const {
  return kl_dirichlet(posterior_theta(aux), posterior_theta(state));
}

}  // namespace cvb
