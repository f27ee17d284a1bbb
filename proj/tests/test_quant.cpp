// Apache License, Version 2.0, refer to LICENSE.txt

#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "cvb/data.hpp"
#include "cvb/optimize.hpp"
#include "cvb/quant.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cvb;
using doctest::Approx;

namespace {

AlignmentMatrix tiny() {
  AlignmentMatrix a;
  a.num_reads = 3;
  a.num_transcripts = 2;
  a.entries = {{0, 0, -0.2}, {0, 1, -1.1}, {1, 1, -0.5}, {2, 0, -2.0}, {2, 1, -0.3}};
  return a;
}

std::vector<double> r_of(const LogitTable& t) { return {t.r().begin(), t.r().end()}; }

}  // namespace

TEST_SUITE("quant") {

TEST_CASE("closed-form bounds") {
  const double c = -1.7;
  AlignmentMatrix two;
  two.num_reads = 1;
  two.num_transcripts = 2;
  two.entries = {{0, 0, c}, {0, 1, c}};
  QuantModel m(two, QuantPrior::symmetric(2, 1.0));
  CHECK(m.bound(LogitTable::uniform(m.layout())) ==
        Approx(c + 2.0 * std::log(std::sqrt(std::numbers::pi) / 2.0)).epsilon(1e-14));

  AlignmentMatrix single;
  single.num_reads = 1;
  single.num_transcripts = 2;
  single.entries = {{0, 0, -0.4}};
  QuantModel s(single, QuantPrior{{0.7, 1.3}});
  const double expected = -0.4 + std::lgamma(2.0) - std::lgamma(3.0) + std::lgamma(1.7) - std::lgamma(0.7);
  CHECK(s.bound(LogitTable::uniform(s.layout())) == Approx(expected).epsilon(1e-14));
}

TEST_CASE("tiny instance agrees with prior sampling") {
  QuantModel m(tiny(), QuantPrior::symmetric(2));
  const auto state = fixture::random_state(m.layout(), 8);
  const auto mc = oracle::quant_log_evidence(tiny(), r_of(state), {1.0, 1.0}, 200000, 29);
  CHECK(std::abs(m.bound(state) - mc.estimate) < 3.0 * mc.std_error);
}

TEST_CASE("per-read likelihood offsets shift the bound") {
  auto shifted = tiny();
  const double offsets[3] = {4.0, -2.5, 0.75};
  for (auto& e : shifted.entries) e.log_lik += offsets[e.read];
  QuantModel a(tiny(), QuantPrior::symmetric(2)), b(shifted, QuantPrior::symmetric(2));
  const auto state = fixture::random_state(a.layout(), 3);
  CHECK(b.bound(state) == Approx(a.bound(state) + 4.0 - 2.5 + 0.75).epsilon(1e-13));
  const auto ga = a.gradients(state), gb = b.gradients(state);
  for (std::size_t i = 0; i < ga.ordinary.size(); ++i) {
    CHECK(gb.ordinary[i] == Approx(ga.ordinary[i]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("gradients") {
  AlignmentMatrix sym;
  sym.num_reads = 1;
  sym.num_transcripts = 2;
  sym.entries = {{0, 0, -1.0}, {0, 1, -1.0}};
  QuantModel m(sym, QuantPrior::symmetric(2, 2.0));
  const auto g = m.gradients(LogitTable::uniform(m.layout()));
  CHECK(g.natural[0] == Approx(g.natural[1]).epsilon(1e-14));

  auto model = fixture::small_quant(2);
  const auto state = fixture::random_state(model.layout(), 4);
  const auto gr = model.gradients(state);
  const auto chained = softmax_chain(model.layout(), state.r(), gr.natural);
  for (std::size_t i = 0; i < chained.size(); ++i) CHECK(chained[i] == Approx(gr.ordinary[i]).epsilon(1e-13));
}

TEST_CASE("unit natural step is the classical update") {
  const auto g = generate_alignments(6, 40, 3, 1.0, 5);
  QuantModel model(g.alignments, QuantPrior::symmetric(6, 0.5));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto state = fixture::random_state(model.layout(), 600 + s);
    const auto next = vbem_step(model, state);
    const auto ref = oracle::quant_vbe(g.alignments, model.prior().alpha0, r_of(state));
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(next.r()[i] - ref[i]));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("posterior over abundances") {
  AlignmentMatrix one;
  one.num_reads = 1;
  one.num_transcripts = 2;
  one.entries = {{0, 0, 0.0}};
  QuantModel m(one, QuantPrior::symmetric(2));
  const auto theta = m.posterior_theta(LogitTable::uniform(m.layout()));
  CHECK(theta[0] == 2.0);
  CHECK(theta[1] == 1.0);

  SUBCASE("no reads leaves the prior") {
    AlignmentMatrix none;
    none.num_transcripts = 3;
    const QuantPrior prior{{0.5, 1.0, 2.0}};
    const auto support = build_read_support(none);
    const auto t = quant_posterior_theta(prior, support, LogitTable::uniform(support.layout));
    for (int k = 0; k < 3; ++k) CHECK(t[k] == prior.alpha0[k]);
  }

  SUBCASE("unambiguous reads give exact counts") {
    const auto g = generate_alignments(5, 300, 1, 1.0, 9);
    QuantModel q(g.alignments, QuantPrior::symmetric(5));
    const auto t = q.posterior_theta(LogitTable::uniform(q.layout()));
    std::vector<double> counts(5, 0.0);
    for (auto tr : g.true_transcript) counts[tr] += 1.0;
    for (int k = 0; k < 5; ++k) CHECK(t[k] / t.total() == Approx((1.0 + counts[k]) / 305.0).epsilon(1e-14));
  }

  SUBCASE("generating abundances lie within three posterior deviations") {
    const auto g = generate_alignments(10, 3000, 2, 0.25, 13);
    QuantModel q(g.alignments, QuantPrior::symmetric(10));
    const auto fit = run(q, random_init(q.layout(), 13), OptimizerConfig{});
    const auto t = q.posterior_theta(fit.state);
    const double a0 = t.total();
    for (int k = 0; k < 10; ++k) {
      const double mean = t[k] / a0;
      const double sd = std::sqrt(mean * (1.0 - mean) / (a0 + 1.0));
      CAPTURE(k);
      CHECK(std::abs(mean - g.true_theta[k]) < 3.0 * sd);
    }
  }
}

TEST_CASE("input validation") {
  auto a = tiny();
  a.entries.push_back({0, 0, -1.0});
  CHECK_THROWS(a.validate());
  a = tiny();
  a.entries[0].transcript = 2;
  CHECK_THROWS(a.validate());
  a = tiny();
  a.entries[0].log_lik = INFINITY;
  CHECK_THROWS(a.validate());
  a = tiny();
  a.entries.erase(a.entries.begin() + 2);
  CHECK_THROWS(a.validate());
  CHECK_THROWS(QuantModel(tiny(), QuantPrior::symmetric(3)));
  CHECK_THROWS(QuantPrior{{1.0, -1.0}}.validate());
}

}
