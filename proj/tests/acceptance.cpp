// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "storctl/cli.hpp"
#include "storctl/storctl.hpp"

using namespace storctl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass)
    ++g_failures;
  char head[64];
  std::snprintf(head, sizeof head, "[%s] C%d ", o.pass ? "PASS" : "FAIL", id);
  std::cout << head << name << " (" << std::fixed << std::setprecision(1) << secs << " s): "
            << o.detail << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

// 1. Path enumeration of the threshold policy against the backward-induction value.
Outcome threshold_optimality() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::mt19937_64 rng(20240601);
  for (int inst = 0; inst < 200; ++inst) {
    const auto atoms = oracle::random_atoms(numeric::mix_seed(1, inst));
    const auto T = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    const DiscretePrice law(atoms.values, atoms.probs);
    const auto th = compute_thresholds_iid(law, T);
    const double enumerated = oracle::threshold_path_cost(atoms, th.thresholds);
    const double dp = brute_force_expected_cost(law, T).online;
    worst = std::max(worst, std::abs(enumerated - dp));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 30.0,
          "200 instances, max |enum - DP| = " + fmt(worst) + ", " + fmt(secs, 3) + " s"};
}

// 2. Offline optimum of the decomposition against integer purchase-plan enumeration.
Outcome lemma_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  int mismatches = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const auto m = oracle::random_instance(numeric::mix_seed(2, inst));
    const std::vector<double> d(m.demand.begin(), m.demand.end());
    if (offline_optimal_general(d, m.prices, m.capacity) !=
        oracle::lattice_offline_optimum(m.demand, m.prices, m.capacity))
      ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 60.0,
          "200 instances, " + std::to_string(mismatches) + " mismatches, " + fmt(secs, 3) + " s"};
}

// 3. Measured regret under the analytic bound.
Outcome bound_dominance() {
  const PriceDistribution u = UniformPrice(0.0, 1.0);
  const double hand = theorem2_bound(regret_params(u, compute_thresholds_iid(u, 3)), 3, 0.5).value;
  bool ok = std::abs(hand - (1.0 - 1.0 / 6.0)) <= 1e-9;
  std::string detail = "U(0,1) T=3 bound " + fmt(hand, 10);
  const std::vector<std::pair<std::string, PriceDistribution>> laws{
      {"U(0,1)", u},
      {"D1", DiscretePrice({0.0, 0.5, 1.0, 2.0}, {0.3, 0.3, 0.2, 0.2})},
      {"D2", DiscretePrice({0.0, 1.0, 2.0, 4.0}, {0.1, 0.3, 0.4, 0.2})}};
  int checked = 0, violations = 0;
  double tightest = numeric::kInf;
  for (std::size_t l = 0; l < laws.size(); ++l) {
    const auto& law = laws[l].second;
    const auto rep = monte_carlo_study(OneShotStudy{law, {3, 5, 8, 12}, 100000, 300 + l});
    for (const auto& h : rep.gamma_series) {
      const auto th = compute_thresholds_iid(law, h.horizon);
      const auto b = theorem2_bound(regret_params(law, th), h.horizon, law.mean());
      if (b.value <= 0.0)
        continue;
      ++checked;
      if (!(h.regret_ucl < b.value))
        ++violations;
      tightest = std::min(tightest, b.value - h.regret_ucl);
    }
  }
  ok = ok && violations == 0 && checked > 0;
  detail += "; " + std::to_string(checked) + " positive bounds, " + std::to_string(violations) +
            " violations, smallest margin " + fmt(tightest);
  return {ok, detail};
}

// 4. Mean regret ratio against the horizon.
Outcome regret_ratio_shape() {
  const PriceDistribution truth = cli::reference_price_model();
  const std::vector<std::size_t> horizons{2, 4, 8, 16, 32};
  const auto rep = monte_carlo_study(OneShotStudy{truth, horizons, 10000, 404});
  std::vector<double> g;
  for (const auto& h : rep.gamma_series)
    g.push_back(h.gamma_mean);
  int inversions = 0;
  for (std::size_t i = 1; i < g.size(); ++i)
    if (g[i] > g[i - 1])
      ++inversions;
  std::string series;
  for (std::size_t i = 0; i < g.size(); ++i)
    series += (i ? ", " : "") + fmt(g[i], 4);
  return {inversions <= 1,
          "gamma(T) = [" + series + "], " + std::to_string(inversions) + " inversion(s)"};
}

// 5. Mean daily competitive ratio of general load serving.
Outcome general_competitive_ratio() {
  const auto t0 = std::chrono::steady_clock::now();
  cli::SynthSpec s;
  s.kind = "load";
  s.slots = 30 * 24;
  s.daily_amplitude = 4.0;
  const auto demand = cli::synthesize(s, parse_timestamp(s.start), 505);
  const double capacity = 0.1 * *std::max_element(demand.begin(), demand.end());
  const auto rep = monte_carlo_study(
      GeneralStudy{cli::reference_price_model(), demand, capacity, 20, 506});
  const double secs = seconds_since(t0);
  return {rep.mean_beta <= 1.05 && rep.min_beta >= 1.0 - 1e-9 && secs < 120.0,
          "30 days x 20 runs, mean beta " + fmt(rep.mean_beta) + " (max " +
              fmt(rep.max_beta) + "), " + fmt(secs, 3) + " s"};
}

// 6. BIC recovery of a three-component mixture and EM monotonicity.
Outcome bic_recovery() {
  const GmmModel truth({{0.3, 0.0, 1.0}, {0.4, 4.5, 1.0}, {0.3, 9.0, 1.0}});
  int hits = 0, monotone_breaks = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto xs = sample(truth, 5000, numeric::mix_seed(6, trial));
    EmConfig cfg;
    cfg.init_seed = numeric::mix_seed(60, trial);
    const auto sel = select_model(xs, 8, cfg);
    if (sel.selected_components() == 3)
      ++hits;
    for (const auto& c : sel.candidates) {
      if (!c.report)
        continue;
      const auto& ll = c.report->log_likelihood_trace;
      for (std::size_t i = 1; i < ll.size(); ++i)
        if (ll[i] < ll[i - 1] - 1e-9)
          ++monotone_breaks;
    }
  }
  return {hits >= 40 && monotone_breaks == 0,
          "K=3 chosen in " + std::to_string(hits) + "/50 trials, " +
              std::to_string(monotone_breaks) + " log-likelihood decreases"};
}

// 7. Peak detection against an independent single-pass recomputation.
Outcome period_detection() {
  int mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(numeric::mix_seed(7, trial));
    cli::SynthSpec s;
    s.slots = 30 * 24;
    s.peak_offset = std::uniform_real_distribution<double>(0.0, 10.0)(rng);
    for (int h = 0; h < 24; ++h)
      if (std::bernoulli_distribution(0.2)(rng))
        s.peak_hours.push_back(h);
    const auto start = HourStamp{std::uniform_int_distribution<std::int64_t>(0, 23)(rng)};
    const PriceTrace tr(start, cli::synthesize(s, start, rng()));

    double sum[24] = {}, total = 0.0;
    int count[24] = {};
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const auto h = static_cast<std::size_t>((start.hours + static_cast<std::int64_t>(i)) % 24);
      sum[h] += tr[i];
      ++count[h];
      total += tr[i];
    }
    std::vector<int> expected;
    for (int h = 0; h < 24; ++h)
      if (sum[h] / count[h] > total / static_cast<double>(tr.size()))
        expected.push_back(h);
    if (detect_periods(tr).peak_hours() != expected)
      ++mismatches;
  }
  cli::SynthSpec peaky;
  peaky.slots = 28 * 24;
  peaky.weights = {0.6, 0.4};
  peaky.means = {25, 35};
  peaky.stds = {3, 4};
  peaky.peak_hours = {17, 18, 19, 20};
  peaky.peak_offset = 30;
  const auto start = parse_timestamp(peaky.start);
  const auto found = detect_periods(PriceTrace(start, cli::synthesize(peaky, start, 11))).peak_hours();
  const bool four = found == std::vector<int>{17, 18, 19, 20};
  return {mismatches == 0 && four, std::to_string(mismatches) +
                                       "/100 mismatches; 4-peak example recovers {17..20}: " +
                                       (four ? "yes" : "no")};
}

// 8. Sizing curve shape and monotone optimal capacity.
Outcome sizing_properties() {
  int non_increasing = 0, concave = 0, diminishing = 0, monotone_bstar = 0;
  for (int inst = 0; inst < 20; ++inst) {
    std::mt19937_64 rng(numeric::mix_seed(8, inst));
    const std::size_t n = 24 * 3;
    std::vector<double> d(n), p(n);
    for (std::size_t t = 0; t < n; ++t) {
      d[t] = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
      p[t] = std::uniform_real_distribution<double>(10.0, 60.0)(rng);
    }
    const double peak = *std::max_element(d.begin(), d.end());
    std::vector<double> grid;
    for (int j = 0; j <= 10; ++j)
      grid.push_back(0.3 * j * peak);
    const auto curve = min_cost_curve(d, p, grid);
    non_increasing += curve.is_non_increasing(1e-9);
    concave += curve.is_concave(1e-9);
    diminishing += curve.has_diminishing_returns(1e-9);
    const double top = curve.marginal_savings.front();
    double prev = numeric::kInf;
    bool mono = true;
    for (int k = 0; k < 10; ++k) {
      const double b = optimal_capacity(curve, top * 1.2 * k / 9.0).B_star;
      mono = mono && b <= prev;
      prev = b;
    }
    monotone_bstar += mono;
  }
  return {non_increasing == 20 && concave == 20 && monotone_bstar == 20,
          "non-increasing " + std::to_string(non_increasing) + "/20, concave " +
              std::to_string(concave) + "/20, B* monotone in pi_b " +
              std::to_string(monotone_bstar) + "/20 (diminishing marginal savings " +
              std::to_string(diminishing) + "/20)"};
}

// 9. End-to-end backtest protocol on the bundled traces.
Outcome backtest_protocol() {
  const fs::path dir = fs::path(STORCTL_SCRATCH_DIR) / "acceptance_backtest";
  fs::remove_all(dir);
  const std::string data = STORCTL_DATA_DIR;
  int days = 0, below_one = 0;
  std::string ratios;
  for (const char* frac : {"0.2", "1.0"}) {
    std::ostringstream out, err;
    const fs::path sub = dir / frac;
    const int rc = cli::run({"backtest", "--prices", data + "/month_prices.csv", "--loads",
                             data + "/month_loads.csv", "--variant", "all",
                             "--capacity-fraction", frac, "--train-days", "21", "--test-days", "7",
                             "--seed", "9", "--reproducible", "--out", sub.string()},
                            out, err);
    if (rc != 0)
      return {false, "backtest exited with " + std::to_string(rc) + ": " + err.str()};
    for (const char* v : {"deta", "deta_p", "deta_i"}) {
      std::ifstream in(sub / ("backtest_" + std::string(v) + ".json"));
      const auto j = nlohmann::json::parse(in);
      for (const auto& d : j["beta_series"]) {
        ++days;
        below_one += d["beta"].get<double>() < 1.0 - 1e-9;
      }
      ratios += std::string(ratios.empty() ? "" : ", ") + v + "@" + frac + "=" +
                fmt(j["competitive_ratio"].get<double>(), 4);
    }
  }
  return {days == 2 * 3 * 7 && below_one == 0,
          std::to_string(days) + " test days, " + std::to_string(below_one) + " with beta < 1 [" +
              ratios + "]"};
}

} // namespace

int main() {
  fs::create_directories(STORCTL_SCRATCH_DIR);
  report(1, "threshold policy equals exact stopping value", threshold_optimality);
  report(2, "offline decomposition equals lattice enumeration", lemma_equivalence);
  report(3, "Monte-Carlo regret below the analytic bound", bound_dominance);
  report(4, "regret ratio diminishes with the horizon", regret_ratio_shape);
  report(5, "general load serving mean beta <= 1.05", general_competitive_ratio);
  report(6, "BIC recovers three components, EM monotone", bic_recovery);
  report(7, "peak detection exact", period_detection);
  report(8, "MinC non-increasing and concave, B* monotone", sizing_properties);
  report(9, "3-week/1-week backtest protocol with beta >= 1 daily", backtest_protocol);
  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) +
                                                              " criterion/criteria failed")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
