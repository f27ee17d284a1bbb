// Apache License, Version 2.0, refer to LICENSE.txt

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

double lgam(double x) { return boost::math::lgamma(x); }
double psi(double x) { return boost::math::digamma(x); }

std::vector<double> softmax(const std::vector<double>& rho, std::size_t width) {
  std::vector<double> out(rho.size());
  for (std::size_t base = 0; base < rho.size(); base += width) {
    double top = rho[base];
    for (std::size_t k = 1; k < width; ++k) top = std::max(top, rho[base + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < width; ++k) z += std::exp(rho[base + k] - top);
    for (std::size_t k = 0; k < width; ++k) out[base + k] = std::exp(rho[base + k] - top) / z;
  }
  return out;
}

std::vector<double> fd_gradient(const cvb::CollapsedModel& model,
                                const cvb::LogitTable& state, double h) {
  const auto rho = state.rho();
  std::vector<double> out(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    std::vector<double> up(rho.begin(), rho.end()), down(rho.begin(), rho.end());
    up[i] += h;
    down[i] -= h;
    const double fu = model.bound(cvb::LogitTable(state.layout(), up));
    const double fd = model.bound(cvb::LogitTable(state.layout(), down));
    out[i] = (fu - fd) / (2.0 * h);
  }
  return out;
}

double normwise_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / std::max(scale, 1e-300);
}

double componentwise_error(const std::vector<double>& a,
                           const std::vector<double>& b, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), floor));
  }
  return worst;
}

MogUpdate mog_vbe(const Eigen::MatrixXd& Y, const std::vector<double>& r,
                  const MogPrior& prior) {
  const std::size_t N = Y.rows(), D = Y.cols(), K = prior.K;
  const double d = static_cast<double>(D);
  MogUpdate out;
  out.alpha.resize(K);
  double alpha_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    double Nk = 0.0;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(D);
    for (std::size_t n = 0; n < N; ++n) {
      Nk += r[n * K + k];
      sum += r[n * K + k] * Y.row(n).transpose();
    }
    NormalWishart c;
    c.kappa = prior.kappa0 + Nk;
    c.nu = prior.nu0 + Nk;
    c.m = (prior.kappa0 * prior.m0 + sum) / c.kappa;
    Eigen::MatrixXd Sk = prior.S0 + prior.kappa0 * (prior.m0 - c.m) * (prior.m0 - c.m).transpose();
    for (std::size_t n = 0; n < N; ++n) {
      const Eigen::VectorXd dev = Y.row(n).transpose() - c.m;
      Sk += r[n * K + k] * dev * dev.transpose();
    }
    c.W = Sk.inverse();
    out.alpha[k] = prior.alpha + Nk;
    alpha_sum += out.alpha[k];
    out.components.push_back(c);
  }
  std::vector<double> rho(N * K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = out.components[k];
    double e_logdet = d * std::numbers::ln2 + std::log(c.W.determinant());
    for (std::size_t j = 1; j <= D; ++j) e_logdet += psi(0.5 * (c.nu + 1.0 - j));
    const double e_logpi = psi(out.alpha[k]) - psi(alpha_sum);
    for (std::size_t n = 0; n < N; ++n) {
      const Eigen::VectorXd dev = Y.row(n).transpose() - c.m;
      const double e_quad = d / c.kappa + c.nu * dev.dot(c.W * dev);
      rho[n * K + k] = e_logpi + 0.5 * e_logdet - 0.5 * e_quad -
                       0.5 * d * std::log(2.0 * std::numbers::pi);
    }
  }
  out.r = softmax(rho, K);
  return out;
}

double kl_dirichlet(const std::vector<double>& a, const std::vector<double>& b) {
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  double kl = lgam(sa) - lgam(sb);
  for (std::size_t i = 0; i < a.size(); ++i) {
    kl += lgam(b[i]) - lgam(a[i]) + (a[i] - b[i]) * (psi(a[i]) - psi(sa));
  }
  return kl;
}

namespace {

// ln B(W, nu) for the Wishart density.
double wishart_log_b(const Eigen::MatrixXd& W, double nu) {
  const double d = static_cast<double>(W.rows());
  double v = -0.5 * nu * std::log(W.determinant()) - 0.5 * nu * d * std::numbers::ln2 -
             0.25 * d * (d - 1.0) * std::log(std::numbers::pi);
  for (int j = 1; j <= W.rows(); ++j) v -= lgam(0.5 * (nu + 1.0 - j));
  return v;
}

// E_q[ln NW(mu, Lambda | p)].
double cross_term(const NormalWishart& q, const NormalWishart& p) {
  const double d = static_cast<double>(q.m.size());
  double e_logdet = d * std::numbers::ln2 + std::log(q.W.determinant());
  for (int j = 1; j <= q.m.size(); ++j) e_logdet += psi(0.5 * (q.nu + 1.0 - j));
  const Eigen::VectorXd dm = q.m - p.m;
  const double e_quad = d / q.kappa + q.nu * dm.dot(q.W * dm);
  const double e_trace = q.nu * (p.W.inverse() * q.W).trace();
  return 0.5 * d * std::log(p.kappa / (2.0 * std::numbers::pi)) + 0.5 * e_logdet -
         0.5 * p.kappa * e_quad + wishart_log_b(p.W, p.nu) +
         0.5 * (p.nu - d - 1.0) * e_logdet - 0.5 * e_trace;
}

}  // namespace

double kl_normal_wishart(const NormalWishart& q, const NormalWishart& p) {
  return cross_term(q, q) - cross_term(q, p);
}

LdaUpdate lda_vbe(const cvb::Corpus& corpus, const std::vector<double>& r,
                  double alpha, double beta, std::size_t K) {
  LdaUpdate out;
  out.alpha_prime = Eigen::MatrixXd::Constant(corpus.num_docs, K, alpha);
  out.beta_prime = Eigen::MatrixXd::Constant(K, corpus.vocab_size, beta);
  for (std::size_t c = 0; c < corpus.cells.size(); ++c) {
    const auto& cell = corpus.cells[c];
    for (std::uint32_t t = 0; t < cell.count; ++t) {
      for (std::size_t k = 0; k < K; ++k) {
        out.alpha_prime(cell.doc, k) += r[c * K + k];
        out.beta_prime(k, cell.word) += r[c * K + k];
      }
    }
  }
  std::vector<double> rho(corpus.cells.size() * K);
  for (std::size_t c = 0; c < corpus.cells.size(); ++c) {
    const auto& cell = corpus.cells[c];
    for (std::size_t k = 0; k < K; ++k) {
      rho[c * K + k] = psi(out.alpha_prime(cell.doc, k)) - psi(out.alpha_prime.row(cell.doc).sum()) +
                       psi(out.beta_prime(k, cell.word)) - psi(out.beta_prime.row(k).sum());
    }
  }
  out.r = softmax(rho, K);
  return out;
}

std::vector<double> quant_vbe(const cvb::AlignmentMatrix& alignments,
                              const std::vector<double>& alpha0,
                              const std::vector<double>& phi) {
  // Entries grouped by read, keeping input order within a read.
  std::vector<std::vector<std::size_t>> by_read(alignments.num_reads);
  for (std::size_t i = 0; i < alignments.entries.size(); ++i) {
    by_read[alignments.entries[i].read].push_back(i);
  }
  std::vector<std::size_t> slot;
  for (const auto& ids : by_read) slot.insert(slot.end(), ids.begin(), ids.end());

  std::vector<double> counts(alignments.num_transcripts, 0.0);
  for (std::size_t j = 0; j < slot.size(); ++j) {
    counts[alignments.entries[slot[j]].transcript] += phi[j];
  }
  std::vector<double> out(slot.size());
  std::size_t j = 0;
  for (const auto& ids : by_read) {
    double total = 0.0;
    const std::size_t start = j;
    for (std::size_t id : ids) {
      const auto& e = alignments.entries[id];
      out[j] = std::exp(e.log_lik + psi(alpha0[e.transcript] + counts[e.transcript]));
      total += out[j++];
    }
    for (std::size_t i = start; i < j; ++i) out[i] /= total;
  }
  return out;
}

namespace {

struct Accumulator {
  std::vector<double> values;
  MonteCarlo finish() const {
    const double top = *std::max_element(values.begin(), values.end());
    double mean = 0.0;
    for (double v : values) mean += std::exp(v - top);
    mean /= values.size();
    double var = 0.0;
    for (double v : values) var += std::pow(std::exp(v - top) - mean, 2);
    var /= (values.size() - 1);
    const double se_mean = std::sqrt(var / values.size());
    return {top + std::log(mean), se_mean / mean};
  }
};

std::vector<double> draw_dirichlet(const std::vector<double>& a, std::mt19937_64& gen) {
  std::vector<double> x(a.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    x[i] = std::gamma_distribution<double>(a[i], 1.0)(gen);
    s += x[i];
  }
  for (auto& v : x) v /= s;
  return x;
}

double xlogx_sum(const std::vector<double>& r) {
  double h = 0.0;
  for (double v : r) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

}  // namespace

MonteCarlo mog_log_evidence(const Eigen::VectorXd& y, const std::vector<double>& r,
                            const MogPrior& prior, std::size_t n, std::uint64_t seed) {
  // One-dimensional data: Lambda ~ Gamma(nu0 / 2, scale 2 / S0).
  std::mt19937_64 gen(seed);
  const std::size_t K = prior.K, N = y.size();
  const double entropy = xlogx_sum(r);
  const double s0 = prior.S0(0, 0), m0 = prior.m0(0);
  std::gamma_distribution<double> precision(0.5 * prior.nu0, 2.0 / s0);
  std::normal_distribution<double> unit(0.0, 1.0);
  Accumulator acc;
  acc.values.reserve(n);
  std::vector<double> a(K, prior.alpha), lam(K), mu(K);
  for (std::size_t s = 0; s < n; ++s) {
    const auto pi = draw_dirichlet(a, gen);
    for (std::size_t k = 0; k < K; ++k) {
      lam[k] = precision(gen);
      mu[k] = m0 + unit(gen) / std::sqrt(prior.kappa0 * lam[k]);
    }
    double l1 = entropy;
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t k = 0; k < K; ++k) {
        const double ll = 0.5 * std::log(lam[k] / (2.0 * std::numbers::pi)) -
                          0.5 * lam[k] * (y[i] - mu[k]) * (y[i] - mu[k]);
        l1 += r[i * K + k] * (std::log(pi[k]) + ll);
      }
    }
    acc.values.push_back(l1);
  }
  return acc.finish();
}

MonteCarlo lda_log_evidence(const cvb::Corpus& corpus, const std::vector<double>& r,
                            double alpha, double beta, std::size_t K, std::size_t n,
                            std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  double entropy = 0.0;
  for (std::size_t c = 0; c < corpus.cells.size(); ++c) {
    std::vector<double> row(r.begin() + c * K, r.begin() + (c + 1) * K);
    entropy += corpus.cells[c].count * xlogx_sum(row);
  }
  Accumulator acc;
  acc.values.reserve(n);
  const std::vector<double> a(K, alpha), b(corpus.vocab_size, beta);
  std::vector<std::vector<double>> theta(corpus.num_docs), phi(K);
  for (std::size_t s = 0; s < n; ++s) {
    for (auto& t : theta) t = draw_dirichlet(a, gen);
    for (auto& p : phi) p = draw_dirichlet(b, gen);
    double l1 = entropy;
    for (std::size_t c = 0; c < corpus.cells.size(); ++c) {
      const auto& cell = corpus.cells[c];
      for (std::size_t k = 0; k < K; ++k) {
        l1 += cell.count * r[c * K + k] *
              (std::log(theta[cell.doc][k]) + std::log(phi[k][cell.word]));
      }
    }
    acc.values.push_back(l1);
  }
  return acc.finish();
}

MonteCarlo quant_log_evidence(const cvb::AlignmentMatrix& alignments,
                              const std::vector<double>& phi,
                              const std::vector<double>& alpha0, std::size_t n,
                              std::uint64_t seed) {
  // phi is indexed by entry, grouped by read in input order.
  std::vector<std::size_t> slot;
  for (std::size_t read = 0; read < alignments.num_reads; ++read) {
    for (std::size_t i = 0; i < alignments.entries.size(); ++i) {
      if (alignments.entries[i].read == read) slot.push_back(i);
    }
  }
  std::mt19937_64 gen(seed);
  const double entropy = xlogx_sum(phi);
  Accumulator acc;
  acc.values.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const auto theta = draw_dirichlet(alpha0, gen);
    double l1 = entropy;
    for (std::size_t j = 0; j < slot.size(); ++j) {
      const auto& e = alignments.entries[slot[j]];
      l1 += phi[j] * (std::log(theta[e.transcript]) + e.log_lik);
    }
    acc.values.push_back(l1);
  }
  return acc.finish();
}

DiscreteNet random_net(std::size_t nodes, double edge_prob, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DiscreteNet net;
  net.nodes = nodes;
  net.parents.resize(nodes);
  // Node order is a topological order.
  for (std::size_t v = 0; v < nodes; ++v) {
    for (std::size_t u = 0; u < v; ++u) {
      if (unit(gen) < edge_prob) net.parents[v].push_back(u);
    }
  }
  std::vector<std::vector<double>> cpt(nodes);
  for (std::size_t v = 0; v < nodes; ++v) {
    cpt[v].resize(std::size_t{1} << net.parents[v].size());
    for (auto& p : cpt[v]) p = 0.05 + 0.9 * unit(gen);
  }
  net.joint.assign(std::size_t{1} << nodes, 1.0);
  for (std::size_t state = 0; state < net.joint.size(); ++state) {
    for (std::size_t v = 0; v < nodes; ++v) {
      std::size_t config = 0;
      for (std::size_t j = 0; j < net.parents[v].size(); ++j) {
        config |= ((state >> net.parents[v][j]) & 1u) << j;
      }
      const double p_one = cpt[v][config];
      net.joint[state] *= ((state >> v) & 1u) ? p_one : 1.0 - p_one;
    }
  }
  return net;
}

double conditional_mutual_information(const DiscreteNet& net,
                                      const std::vector<std::size_t>& a,
                                      const std::vector<std::size_t>& b,
                                      const std::vector<std::size_t>& given) {
  auto mask_of = [](const std::vector<std::size_t>& vs) {
    std::size_t m = 0;
    for (auto v : vs) m |= std::size_t{1} << v;
    return m;
  };
  const std::size_t ma = mask_of(a), mb = mask_of(b), mz = mask_of(given);
  const std::size_t size = net.joint.size();
  // Marginals indexed by the masked state.
  std::vector<double> pabz(size, 0.0), paz(size, 0.0), pbz(size, 0.0), pz(size, 0.0);
  for (std::size_t s = 0; s < size; ++s) {
    const double p = net.joint[s];
    pabz[s & (ma | mb | mz)] += p;
    paz[s & (ma | mz)] += p;
    pbz[s & (mb | mz)] += p;
    pz[s & mz] += p;
  }
  double cmi = 0.0;
  for (std::size_t s = 0; s < size; ++s) {
    if ((s & ~(ma | mb | mz)) != 0) continue;
    const double p = pabz[s];
    if (p <= 0.0) continue;
    cmi += p * std::log(p * pz[s & mz] / (paz[s & (ma | mz)] * pbz[s & (mb | mz)]));
  }
  return cmi;
}

}  // namespace oracle
