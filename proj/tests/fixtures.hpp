// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef CVB_TESTS_FIXTURES_HPP_
#define CVB_TESTS_FIXTURES_HPP_

#include <cstdint>
#include <vector>

#include "cvb/lda.hpp"
#include "cvb/mog.hpp"
#include "cvb/quant.hpp"

namespace fixture {

// N = 20, D = 2, K = 3 with the default weak priors.
cvb::MogModel small_mog(std::uint64_t seed);
// 3 documents, 10 word types, 2 topics.
cvb::LdaModel small_lda(std::uint64_t seed);
// 10 reads over 4 transcripts, 2 candidates per read.
cvb::QuantModel small_quant(std::uint64_t seed);

// Logits with N(0, sigma^2) entries.
cvb::LogitTable random_state(const cvb::RowLayout& layout, std::uint64_t seed,
                             double sigma = 1.0);
// Direction with zero row sums, so it has no component along the gauge.
std::vector<double> random_direction(const cvb::RowLayout& layout, std::uint64_t seed);

}  // namespace fixture

#endif  // CVB_TESTS_FIXTURES_HPP_
