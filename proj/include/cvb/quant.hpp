// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef CVB_QUANT_HPP_
#define CVB_QUANT_HPP_

#include <cstddef>
#include <vector>

#include "cvb/expfam.hpp"
#include "cvb/model.hpp"

namespace cvb {

// One candidate alignment: ln p(read | transcript), precomputed upstream.
struct Alignment {
  std::size_t read = 0;
  std::size_t transcript = 0;
  double log_lik = 0.0;
};

struct AlignmentMatrix {
  std::size_t num_reads = 0;
  std::size_t num_transcripts = 0;
  std::vector<Alignment> entries;

  // Every read needs at least one candidate; ids in range; log-likelihoods
  // finite; no repeated (read, transcript) pair.
  void validate() const;
};

// Dirichlet prior over transcript abundances theta.
struct QuantPrior {
  std::vector<double> alpha0;

  static QuantPrior symmetric(std::size_t num_transcripts, double alpha = 1.0);
  double total() const;
  void validate() const;
};

// Alignments regrouped by read: row n of `layout` lists read n's candidate
// transcripts, in the order they appear in the input.
struct ReadSupport {
  RowLayout layout;
  std::vector<std::size_t> transcript;
  std::vector<double> log_lik;
  std::size_t num_transcripts = 0;
};

ReadSupport build_read_support(const AlignmentMatrix& alignments);

// phi_hat[m] = sum_n phi_nm.
std::vector<double> expected_counts(const ReadSupport& support,
                                    const LogitTable& state);

double quant_bound(const QuantPrior& prior, const ReadSupport& support,
                   const LogitTable& state);
GradientPair quant_gradient(const QuantPrior& prior, const ReadSupport& support,
                            const LogitTable& state);

// Dirichlet(alpha0_m + phi_hat_m).
DirichletParams quant_posterior_theta(const QuantPrior& prior,
                                      const ReadSupport& support,
                                      const LogitTable& state);

class QuantModel final : public CollapsedModel {
 public:
  QuantModel(const AlignmentMatrix& alignments, QuantPrior prior);

  const RowLayout& layout() const override { return support_.layout; }
  double bound(const LogitTable& state) const override;
  GradientPair gradients(const LogitTable& state) const override;
  double mean_field(const LogitTable& state,
                    const LogitTable& aux) const override;
  double posterior_kl(const LogitTable& state,
                      const LogitTable& aux) const override;
  bool supports_mean_field() const override { return true; }

  DirichletParams posterior_theta(const LogitTable& state) const;
  const ReadSupport& support() const { return support_; }
  const QuantPrior& prior() const { return prior_; }

 private:
  ReadSupport support_;
  QuantPrior prior_;
};

}  // namespace cvb

#endif  // CVB_QUANT_HPP_
