// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef CVB_LDA_HPP_
#define CVB_LDA_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvb/expfam.hpp"
#include "cvb/model.hpp"

namespace cvb {

// One (document, word type) cell of a bag-of-words corpus.  Ids are 0-based.
struct WordCount {
  std::size_t doc = 0;
  std::size_t word = 0;
  std::uint32_t count = 0;
};

struct Corpus {
  std::size_t num_docs = 0;
  std::size_t vocab_size = 0;
  std::vector<WordCount> cells;
  std::vector<std::string> vocab;  // optional, empty or vocab_size long

  // Throws std::invalid_argument on zero counts, out-of-range ids or
  // repeated (doc, word) cells.
  void validate() const;
  std::vector<double> doc_lengths() const;
  double total_tokens() const;
};

struct LdaPriors {
  double alpha = 0.1;
  double beta = 0.1;
  std::size_t K = 1;

  void validate() const;
};

// alpha_prime(d, k) = alpha + sum of responsibility mass of doc d on topic k.
// beta_prime(k, v)  = beta + mass of word v assigned to topic k.
struct LdaPosterior {
  Eigen::MatrixXd alpha_prime;
  Eigen::MatrixXd beta_prime;
};

// The state holds one row per corpus cell, in corpus order, each of width K;
// a cell's responsibilities are shared by all `count` copies of its token.
LdaPosterior lda_posterior(const LdaPriors& priors, const Corpus& corpus,
                           const LogitTable& state);
double lda_bound(const LdaPriors& priors, const Corpus& corpus,
                 const LogitTable& state);
GradientPair lda_gradient(const LdaPriors& priors, const Corpus& corpus,
                          const LogitTable& state);

struct TopicWord {
  std::size_t word = 0;
  double weight = 0.0;  // posterior-mean word probability within the topic
};

// Top words per topic by beta_prime, ties broken by ascending word id.
std::vector<std::vector<TopicWord>> lda_topics(const LdaPosterior& posterior,
                                               std::size_t top_n);

class LdaModel final : public CollapsedModel {
 public:
  LdaModel(Corpus corpus, LdaPriors priors);

  const RowLayout& layout() const override { return layout_; }
  double bound(const LogitTable& state) const override;
  GradientPair gradients(const LogitTable& state) const override;
  double mean_field(const LogitTable& state,
                    const LogitTable& aux) const override;
  double posterior_kl(const LogitTable& state,
                      const LogitTable& aux) const override;
  bool supports_mean_field() const override { return true; }

  LdaPosterior posterior(const LogitTable& state) const;
  const Corpus& corpus() const { return corpus_; }
  const LdaPriors& priors() const { return priors_; }

 private:
  Corpus corpus_;
  LdaPriors priors_;
  RowLayout layout_;
};

}  // namespace cvb

#endif  // CVB_LDA_HPP_
