#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "storctl/evaluation.hpp"

using namespace storctl;
using Catch::Approx;

TEST_CASE("offline one-shot", "[evaluation]") {
  const auto c = offline_one_shot(std::vector<double>{0.9, 0.2, 0.7});
  CHECK(c.slot == 1);
  CHECK(c.cost == 0.2);
  CHECK(offline_one_shot(std::vector<double>{3, 3, 3}).slot == 0);
  CHECK(offline_one_shot(std::vector<double>{5}).slot == 0);
  CHECK_THROWS_AS(offline_one_shot(std::vector<double>{}), InputError);
}

TEST_CASE("offline general optimum", "[evaluation]") {
  const std::vector<double> d{1, 2, 0, 3};
  const std::vector<double> p{0.5, 2.0, 1.0, 3.0};
  CHECK(offline_optimal_general(d, p, 0.0) == 0.5 + 4.0 + 9.0);
  CHECK(offline_optimal_general(d, p, 6.0) == 6 * 0.5);
  CHECK(oracle::lattice_offline_optimum({1, 2, 0, 3}, p, 6) == 3.0);
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    const auto m = oracle::random_instance(seed);
    const std::vector<double> dd(m.demand.begin(), m.demand.end());
    CHECK(offline_optimal_general(dd, m.prices, m.capacity) ==
          oracle::lattice_offline_optimum(m.demand, m.prices, m.capacity));
  }
}

TEST_CASE("ratios", "[evaluation]") {
  CHECK(regret_ratio(5.0, 5.0) == 0.0);
  CHECK(competitive_ratio(5.0, 5.0) == 1.0);
  CHECK(competitive_ratio(1.04 * 7.0, 7.0) == Approx(1.04));
  CHECK_THROWS_AS(regret_ratio(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(competitive_ratio(1.0, -1.0), DomainError);
}

TEST_CASE("regret parameters", "[evaluation]") {
  const PriceDistribution u = UniformPrice(0.0, 1.0);
  const auto rp = regret_params(u, compute_thresholds_iid(u, 6));
  CHECK(rp.alpha == Approx(1.0 / 3.0).margin(1e-15));
  REQUIRE(rp.betas.size() == 5);
  for (double b : rp.betas)
    CHECK(b == 1.0);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> U(0, 1);
  double acc = 0.0;
  for (int i = 0; i < 1000000; ++i)
    acc += std::min(U(rng), U(rng));
  CHECK(acc / 1e6 == Approx(1.0 / 3.0).margin(2e-3));

  const PriceDistribution c = PointMassPrice{2.0};
  CHECK(regret_params(c, compute_thresholds_iid(c, 3)).alpha == 0.5);

  const PriceDistribution neg = UniformPrice(-1.0, 1.0);
  CHECK_THROWS_AS(regret_params(neg, compute_thresholds_iid(neg, 3)), DomainError);

  // mixture: alpha from quadrature of 2 p F̄(p) f(p)
  const GmmModel m({{0.5, 22.0, 3.0}, {0.5, 40.0, 4.0}});
  const PriceDistribution pm = m;
  const double emin =
      oracle::integrate([&](double p) { return 2 * p * (1 - m.cdf(p)) * m.pdf(p); }, 0.0, 120.0);
  const auto mp = regret_params(pm, compute_thresholds_iid(pm, 4));
  CHECK(mp.alpha == Approx(emin / (2 * m.mean())).epsilon(1e-10));
  // density infimum on [0, theta] against a dense scan
  const auto th = compute_thresholds_iid(pm, 4);
  for (std::size_t i = 0; i < mp.betas.size(); ++i) {
    const double theta = th[th.size() - 2 - i];
    double scan = numeric::kInf;
    for (int k = 0; k <= 200000; ++k)
      scan = std::min(scan, m.pdf(theta * k / 200000.0));
    CHECK(mp.betas[i] <= scan + 1e-15);
    CHECK(mp.betas[i] == Approx(scan).epsilon(1e-6));
  }
}

TEST_CASE("bound calculators", "[evaluation]") {
  const PriceDistribution u = UniformPrice(0.0, 1.0);
  auto bound = [&](std::size_t T) {
    return theorem2_bound(regret_params(u, compute_thresholds_iid(u, T)), T, 0.5);
  };
  CHECK(bound(3).value == Approx(1.0 - 1.0 / 6.0).margin(1e-12));
  CHECK(bound(2).value == Approx(5.0 / 3.0).margin(1e-12));
  CHECK_FALSE(bound(3).vacuous);
  CHECK_THROWS_AS(theorem2_bound(RegretParams{0.3, {0.0, 0.0}}, 3, 1.0), DomainError);
  const auto v = theorem2_bound(RegretParams{0.5, {100.0}}, 2, 10.0);
  CHECK(v.vacuous);
  CHECK(v.value < 0.0);

  const double s = 1.0 / (2.0 * std::sqrt(3.0));
  CHECK_THROWS_AS(uniform_bound(0.5, s, 10), DomainError);
  const auto edge = uniform_bound(0.5, s, 10, true);
  CHECK(edge.value == Approx(2.0 / 9.0 - 10 * 0.5 * std::pow(1.0 / 3.0, 9)).margin(1e-12));
  CHECK(uniform_bound(2.0, 0.2, 10).value ==
        Approx(4 * std::sqrt(3.0) * 0.2 / 9 -
               20 * std::pow(1 - (4.0 + 0.04) / (2 * std::sqrt(3.0) * 2 * 0.2), 9)));
  CHECK_THROWS_AS(uniform_bound(1.0, 1.0, 10), DomainError);
  CHECK_THROWS_AS(uniform_bound(1.0, 0.1, 1), DomainError);
}

TEST_CASE("exact enumeration of discrete laws", "[evaluation]") {
  const DiscretePrice coin({0.0, 1.0}, {0.5, 0.5});
  const auto e = brute_force_expected_cost(coin, 2);
  CHECK(e.online == 0.25);
  CHECK(e.offline == 0.25);
  const DiscretePrice point({4.0}, {1.0});
  for (std::size_t T = 1; T < 6; ++T)
    CHECK(brute_force_expected_cost(point, T).online == 4.0);
  CHECK_THROWS_AS(brute_force_expected_cost(DiscretePrice({0, 1, 2, 3}, {.25, .25, .25, .25}), 12),
                  DomainError);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = oracle::random_atoms(seed);
    const DiscretePrice law(a.values, a.probs);
    double prev = numeric::kInf;
    for (std::size_t T = 1; T <= 6; ++T) {
      const auto x = brute_force_expected_cost(law, T);
      CHECK(x.online <= prev + 1e-12);
      CHECK(x.offline <= x.online + 1e-12);
      prev = x.online;
    }
  }
}

TEST_CASE("oracle agrees with simulated policy mean", "[evaluation]") {
  const DiscretePrice law({0.0, 1.0, 2.5}, {0.3, 0.5, 0.2});
  const std::size_t T = 5;
  const auto exact = brute_force_expected_cost(law, T);
  const auto rep = monte_carlo_study(OneShotStudy{law, {T}, 100000, 2024});
  const auto& h = rep.gamma_series.front();
  const double se = numeric::standard_error(h.policy_costs);
  CHECK(std::abs(h.policy_mean - exact.online) <= 3.0 * se);
  CHECK(h.expected_policy_cost == Approx(exact.online).margin(1e-12));
}

TEST_CASE("study reports", "[evaluation]") {
  const PriceDistribution u = UniformPrice(1.0, 2.0);
  const auto a = monte_carlo_study(OneShotStudy{u, {2, 4}, 200, 5});
  const auto b = monte_carlo_study(OneShotStudy{u, {2, 4}, 200, 5});
  CHECK(report_to_json(a) == report_to_json(b));
  for (const auto& h : a.gamma_series)
    for (std::size_t i = 0; i < h.policy_costs.size(); ++i)
      CHECK(h.policy_costs[i] >= h.offline_costs[i] - 1e-12);

  std::vector<double> demand(24 * 3);
  for (std::size_t t = 0; t < demand.size(); ++t)
    demand[t] = 1.0 + (t % 24 >= 17 ? 2.0 : 0.0);
  const auto g = monte_carlo_study(GeneralStudy{u, demand, 1.5, 5, 11});
  CHECK(g.beta_series.size() == 3);
  for (const auto& d : g.beta_series)
    CHECK(d.beta >= 1.0 - 1e-9);
  CHECK(g.mean_beta >= 1.0);
  CHECK_THROWS_AS(monte_carlo_study(GeneralStudy{u, demand, 1.5, 0, 11}), ExperimentError);

  std::ostringstream gc, bc;
  write_gamma_csv(gc, a);
  write_beta_csv(bc, g);
  CHECK(gc.str().starts_with("T,gamma_mean,gamma_ci_lo,gamma_ci_hi\n2,"));
  CHECK(bc.str().starts_with("day,beta\n0,"));
}
