#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "storctl/gmm.hpp"

using namespace storctl;
using Catch::Approx;

namespace {

GmmModel mixture() { return GmmModel({{0.3, -1.0, 0.5}, {0.5, 2.0, 1.5}, {0.2, 6.0, 0.8}}); }

void check_fit_invariants(const FitReport& r, const EmConfig& cfg) {
  CHECK(r.iterations <= cfg.max_iter);
  for (std::size_t i = 1; i < r.log_likelihood_trace.size(); ++i)
    CHECK(r.log_likelihood_trace[i] >= r.log_likelihood_trace[i - 1] - 1e-9);
  CHECK(r.max_responsibility_defect <= 1e-12);
  CHECK(r.max_mass_defect <= 1e-7);
}

} // namespace

TEST_CASE("model validation", "[gmm]") {
  CHECK_THROWS_AS(GmmModel({{0.5, 0.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(GmmModel({{1.0, 0.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(GmmModel({{1.5, 0.0, 1.0}, {-0.5, 1.0, 1.0}}), std::invalid_argument);
  CHECK_NOTHROW(GmmModel({{0.5, 0.0, 1.0}, {0.5, 3.0, 1.0}}));
}

TEST_CASE("density, distribution and partial expectation", "[gmm]") {
  const auto m = mixture();
  CHECK(m.cdf(-1.0 - 12 * 1.5) < 1e-12);
  CHECK(GmmModel::normal(4.0, 2.0).cdf(4.0) == Approx(0.5).margin(1e-15));

  const double direct_cdf = oracle::integrate([&](double p) { return m.pdf(p); }, -30.0, 3.7);
  CHECK(m.cdf(3.7) == Approx(direct_cdf).margin(1e-10));
  const double mass = oracle::integrate([&](double p) { return m.pdf(p); }, -1.0 - 18, 6.0 + 18);
  CHECK(mass == Approx(1.0).margin(1e-6));

  const double pe = oracle::integrate([&](double p) { return p * m.pdf(p); }, 0.2, 1.7);
  CHECK(m.partial_expectation(0.2, 1.7) == Approx(pe).margin(1e-8));
  CHECK(m.partial_expectation(0.9, 0.9) == 0.0);
  CHECK(GmmModel::normal(0.0, 1.0).partial_expectation(-numeric::kInf, numeric::kInf) ==
        Approx(0.0).margin(1e-15));
  CHECK(m.partial_expectation(-40.0, 40.0) == Approx(m.mean()).margin(1e-8));
  CHECK(m.mean() == Approx(0.3 * -1 + 0.5 * 2 + 0.2 * 6));

  double prev = 0.0;
  for (double p = -10; p <= 15; p += 0.25) {
    CHECK(m.pdf(p) >= 0.0);
    CHECK(m.cdf(p) >= prev);
    prev = m.cdf(p);
  }
}

TEST_CASE("log-likelihood", "[gmm]") {
  const auto n = GmmModel::normal(0.0, 1.0);
  const std::vector<double> one{0.0}, two{0.0, 0.0};
  CHECK(log_likelihood(n, one) == Approx(-0.5 * std::log(2 * std::numbers::pi)).margin(1e-15));
  CHECK(log_likelihood(n, one) == Approx(-0.9189385332).margin(1e-10));
  CHECK(log_likelihood(n, std::vector<double>{}) == 0.0);
  CHECK(log_likelihood(n, two) == 2.0 * log_likelihood(n, one));
  // far tail stays finite
  CHECK(std::isfinite(log_likelihood(n, std::vector<double>{60.0})));
}

TEST_CASE("BIC arithmetic", "[gmm]") {
  CHECK(bic(-100.0, 500, 2) == Approx(2 * std::log(500.0) + 200).margin(1e-12));
  CHECK(bic(-100.0, 500, 2) == Approx(212.4292).margin(1e-4));
  CHECK(bic(-7.0, 30, 0) == 14.0);
  CHECK(bic(-7.0, 30, 8) - bic(-7.0, 30, 4) == Approx(4 * std::log(30.0)));
  CHECK(free_parameters(1) == 2);
  CHECK(free_parameters(3) == 8);
}

TEST_CASE("sampling is seeded and unbiased", "[gmm]") {
  const auto n = GmmModel::normal(5.0, 2.0);
  CHECK(sample(n, 0, 1).empty());
  CHECK(sample(n, 100, 9) == sample(n, 100, 9));
  CHECK(sample(n, 100, 9) != sample(n, 100, 10));
  const auto xs = sample(n, 100000, 3);
  CHECK(std::abs(numeric::mean(xs) - 5.0) < 0.05);
  const auto flat = sample_mixture(std::vector<GaussianComponent>{{1.0, 7.0, 0.0}}, 10, 1);
  for (double x : flat)
    CHECK(x == 7.0);
}

TEST_CASE("single component fit is closed form", "[gmm]") {
  EmConfig cfg;
  const std::vector<double> xs{1, 2, 3};
  const auto r = em_fit(xs, 1, cfg);
  REQUIRE(r.model.size() == 1);
  const auto c = r.model.components()[0];
  CHECK(c.mean == Approx(2.0).margin(1e-12));
  CHECK(c.std == Approx(std::sqrt(2.0 / 3.0)).margin(1e-12));
  CHECK(c.weight == 1.0);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  check_fit_invariants(r, cfg);
}

TEST_CASE("constant samples hit the sigma floor", "[gmm]") {
  const std::vector<double> xs(50, 7.0);
  const auto r = em_fit(xs, 1, EmConfig{});
  const auto c = r.model.components()[0];
  CHECK(c.mean == 7.0);
  CHECK(c.std == Approx(1e-9));
  CHECK(std::isfinite(r.log_likelihood));
}

TEST_CASE("two separated components are recovered", "[gmm]") {
  auto lo = sample(GmmModel::normal(0.0, 1.0), 2500, 11);
  const auto hi = sample(GmmModel::normal(10.0, 1.0), 2500, 12);
  const double lo_mean = numeric::mean(lo), hi_mean = numeric::mean(hi);
  lo.insert(lo.end(), hi.begin(), hi.end());
  EmConfig cfg;
  cfg.init_seed = 4;
  const auto r = em_fit(lo, 2, cfg);
  const auto comps = r.model.components();
  CHECK(std::abs(comps[0].mean - lo_mean) < 0.2);
  CHECK(std::abs(comps[1].mean - hi_mean) < 0.2);
  CHECK(std::abs(comps[0].mean - 0.0) < 0.2);
  CHECK(std::abs(comps[1].mean - 10.0) < 0.2);
  check_fit_invariants(r, cfg);
  CHECK(r.log_likelihood_trace.back() >= r.log_likelihood_trace.front());
}

TEST_CASE("fit preconditions", "[gmm]") {
  CHECK_THROWS_AS(em_fit(std::vector<double>{1.0}, 2, EmConfig{}), InsufficientSamplesError);
  CHECK_THROWS_AS(em_fit(std::vector<double>{1, 1, 1, 1}, 2, EmConfig{}), FitError);
  EmConfig bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("model selection", "[gmm]") {
  EmConfig cfg;
  cfg.init_seed = 21;
  const auto single = sample(GmmModel::normal(3.0, 1.0), 800, 8);
  const auto sel = select_model(single, 3, cfg);
  CHECK(sel.selected_components() == 1);
  REQUIRE(sel.candidates.size() == 3);
  REQUIRE(sel.candidates[1].report);
  CHECK(sel.candidates[0].report->bic < sel.candidates[1].report->bic);

  const auto k1 = select_model(single, 1, cfg);
  CHECK(k1.candidates.size() == 1);
  CHECK(k1.selected_components() == 1);

  const auto three = sample(GmmModel({{0.3, 0.0, 1.0}, {0.4, 8.0, 1.0}, {0.3, 16.0, 1.0}}), 3000, 2);
  CHECK(select_model(three, 8, cfg).selected_components() == 3);
  // same seed, same answer
  CHECK(select_model(three, 4, cfg).best.model == select_model(three, 4, cfg).best.model);
}

TEST_CASE("model JSON", "[gmm]") {
  const GmmModel m({{0.4, 5.0, 1.0}, {0.6, -2.0, 0.5}});
  const nlohmann::json j = m;
  CHECK(j.at("components").size() == 2);
  CHECK(j["components"][0]["mean"] == -2.0);
  CHECK(gmm_from_json(j) == m.canonical());
  CHECK_THROWS_AS(gmm_from_json(nlohmann::json::parse(R"({"components":[{"weight":1}]})")),
                  InputError);
  CHECK_THROWS_AS(gmm_from_json(nlohmann::json::parse("[]")), InputError);
}
