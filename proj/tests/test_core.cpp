// Apache License, Version 2.0, refer to LICENSE.txt

#include <cmath>
#include <memory>

#include "doctest.h"
#include "cvb/model.hpp"
#include "cvb/optimize.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cvb;

namespace {

struct Named {
  std::string name;
  std::unique_ptr<CollapsedModel> model;
};

std::vector<Named> all_models(std::uint64_t seed) {
  std::vector<Named> out;
  out.push_back({"mog", std::make_unique<MogModel>(fixture::small_mog(seed))});
  out.push_back({"lda", std::make_unique<LdaModel>(fixture::small_lda(seed))});
  out.push_back({"quant", std::make_unique<QuantModel>(fixture::small_quant(seed))});
  return out;
}

class ConstantModel final : public CollapsedModel {
 public:
  const RowLayout& layout() const override { return layout_; }
  double bound(const LogitTable&) const override { return 1.0; }
  GradientPair gradients(const LogitTable& s) const override {
    return {std::vector<double>(s.size(), 0.0), std::vector<double>(s.size(), 0.0)};
  }

 private:
  RowLayout layout_ = RowLayout::dense(2, 2);
};

}  // namespace

TEST_SUITE("core") {

TEST_CASE("ordinary gradient matches central differences") {
  for (auto& [name, model] : all_models(3)) {
    CAPTURE(name);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto state = fixture::random_state(model->layout(), 100 + s);
      const auto g = model->gradients(state);
      const auto fd = oracle::fd_gradient(*model, state, 1e-6);
      CHECK(oracle::normwise_error(fd, g.ordinary) < 1e-6);
    }
  }
}

TEST_CASE("ordinary gradient rows sum to zero") {
  for (auto& [name, model] : all_models(4)) {
    CAPTURE(name);
    const auto state = fixture::random_state(model->layout(), 9);
    const auto g = model->gradients(state);
    const auto& layout = model->layout();
    for (std::size_t i = 0; i < layout.rows(); ++i) {
      double s = 0.0, scale = 0.0;
      for (std::size_t k = 0; k < layout.width(i); ++k) {
        s += g.ordinary[layout.offset(i) + k];
        scale += std::abs(g.ordinary[layout.offset(i) + k]);
      }
      CHECK(std::abs(s) <= 1e-12 * (1.0 + scale));
    }
  }
}

TEST_CASE("riemannian inner product is non-negative") {
  for (auto& [name, model] : all_models(5)) {
    CAPTURE(name);
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto g = model->gradients(fixture::random_state(model->layout(), s, 2.0));
      CHECK(riemannian_inner(g.natural, g.ordinary) >= 0.0);
    }
  }
}

TEST_CASE("collapsed bound dominates the mean-field bound") {
  for (auto& [name, model] : all_models(6)) {
    CAPTURE(name);
    REQUIRE(model->supports_mean_field());
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto state = fixture::random_state(model->layout(), 2 * s);
      const auto aux = fixture::random_state(model->layout(), 2 * s + 1);
      const auto report = mean_field_bound(*model, state, aux);
      CHECK(report.klc >= *report.mf - 1e-9);
      CHECK(*report.kl_gap >= 0.0);
      CHECK(report.klc - *report.mf ==
            doctest::Approx(*report.kl_gap).epsilon(1e-8).scale(1.0));

      const auto same = mean_field_bound(*model, state, state);
      CHECK(std::abs(same.klc - *same.mf) < 1e-8);
      CHECK(std::abs(*same.kl_gap) < 1e-10);
    }
  }
}

TEST_CASE("curvature of the collapsed bound is at least the mean-field curvature") {
  for (auto& [name, model] : all_models(7)) {
    CAPTURE(name);
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto state = fixture::random_state(model->layout(), 50 + s);
      const auto dir = fixture::random_direction(model->layout(), 80 + s);
      const auto c = directional_curvature(*model, state, dir, 1e-4);
      CHECK(c.klc_second >= c.mf_second - 1e-4 * (1.0 + std::abs(c.mf_second)));
    }
    // A per-row constant is invisible to both bounds.
    const auto state = fixture::random_state(model->layout(), 1);
    const std::vector<double> gauge(model->layout().size(), 1.0);
    const auto c = directional_curvature(*model, state, gauge, 1e-4);
    CHECK(std::abs(c.klc_second) < 1e-3);
    CHECK(std::abs(c.mf_second) < 1e-3);
  }
  auto model = fixture::small_mog(1);
  const auto state = fixture::random_state(model.layout(), 1);
  const auto dir = fixture::random_direction(model.layout(), 2);
  CHECK_THROWS(directional_curvature(model, state, dir, 1e-6));
  CHECK_THROWS(directional_curvature(model, state, dir, 1e-2));
}

TEST_CASE("models without a mean-field form say so") {
  ConstantModel m;
  const auto s = LogitTable::uniform(m.layout());
  CHECK_FALSE(m.supports_mean_field());
  CHECK_THROWS_AS(mean_field_bound(m, s, s), NotSupported);
  CHECK_THROWS_AS(m.posterior_kl(s, s), NotSupported);
}

TEST_CASE("states with the wrong shape are rejected") {
  for (auto& [name, model] : all_models(8)) {
    CAPTURE(name);
    const auto wrong = LogitTable::uniform(RowLayout::dense(1, 1));
    CHECK_THROWS(model->bound(wrong));
    CHECK_THROWS(model->gradients(wrong));
  }
}

}
