// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef CVB_RNG_HPP_
#define CVB_RNG_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace cvb {

// xoshiro256** seeded through splitmix64.  All floating-point draws use a
// fixed transformation order so that streams are reproducible across
// platforms and languages:
//   uniform():   (next() >> 11) * 2^-53, in [0, 1)
//   normal():    Box-Muller on (1 - u1, u2), returning cos then sin branch
//   gamma(a):    Marsaglia-Tsang squeeze for a >= 1; a < 1 boosted by
//                gamma(a + 1) * u^(1/a)
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  double uniform();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  double gamma(double shape);
  std::vector<double> dirichlet(std::span<const double> alpha);
  // Index drawn with probability proportional to weights.
  std::size_t categorical(std::span<const double> weights);

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cvb

#endif  // CVB_RNG_HPP_
