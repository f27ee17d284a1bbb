// Apache License, Version 2.0, refer to LICENSE.txt

#include "fixtures.hpp"

#include <random>

#include "cvb/data.hpp"

namespace fixture {

cvb::MogModel small_mog(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  cvb::MogData data;
  data.Y.resize(20, 2);
  for (int n = 0; n < 20; ++n) {
    const double shift = (n % 3) * 2.5;
    data.Y(n, 0) = shift + n01(gen);
    data.Y(n, 1) = -shift + 0.7 * n01(gen);
  }
  auto priors = cvb::default_mog_priors(data, 3);
  return cvb::MogModel(std::move(data), priors);
}

cvb::LdaModel small_lda(std::uint64_t seed) {
  auto g = cvb::generate_corpus(2, 3, 10, 15, 0.5, 0.5, seed);
  return cvb::LdaModel(std::move(g.corpus), cvb::LdaPriors{0.1, 0.1, 2});
}

cvb::QuantModel small_quant(std::uint64_t seed) {
  auto g = cvb::generate_alignments(4, 10, 2, 1.0, seed);
  return cvb::QuantModel(g.alignments, cvb::QuantPrior::symmetric(4));
}

cvb::LogitTable random_state(const cvb::RowLayout& layout, std::uint64_t seed,
                             double sigma) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> rho(layout.size());
  for (auto& v : rho) v = dist(gen);
  return cvb::LogitTable(layout, std::move(rho));
}

std::vector<double> random_direction(const cvb::RowLayout& layout, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n01;
  std::vector<double> dir(layout.size());
  for (auto& v : dir) v = n01(gen);
  for (std::size_t i = 0; i < layout.rows(); ++i) {
    double mean = 0.0;
    for (std::size_t k = 0; k < layout.width(i); ++k) mean += dir[layout.offset(i) + k];
    mean /= static_cast<double>(layout.width(i));
    for (std::size_t k = 0; k < layout.width(i); ++k) dir[layout.offset(i) + k] -= mean;
  }
  return dir;
}

}  // namespace fixture
