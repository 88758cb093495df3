#pragma once

// Offline benchmarks, regret and competitive-ratio metrics, the analytic
// regret bounds, an exact enumeration oracle for discrete laws, and seeded
// Monte-Carlo study drivers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "storctl/decomposition.hpp"
#include "storctl/distribution.hpp"
#include "storctl/error.hpp"
#include "storctl/hourly_trace.hpp"
#include "storctl/numeric.hpp"
#include "storctl/policy.hpp"

namespace storctl {

struct OfflineChoice {
  Slot slot = 0;
  double cost = 0.0;
};

/// Cheapest slot of the window; ties go to the earliest slot.
inline OfflineChoice offline_one_shot(std::span<const double> prices) {
  if (prices.empty())
    throw InputError("offline benchmark needs a non-empty window");
  const auto it = std::min_element(prices.begin(), prices.end());
  return {static_cast<Slot>(it - prices.begin()), *it};
}

/// Offline optimum of the general problem: every decomposed piece bought at
/// the cheapest price of its window.
inline double offline_optimal_general(std::span<const double> demand,
                                      std::span<const double> prices, double capacity) {
  if (demand.size() != prices.size())
    throw AlignmentError("demand and price sequences differ in length");
  std::vector<double> costs;
  for (const auto& p : decompose(demand, capacity))
    costs.push_back(p.quantity * offline_one_shot(prices.subspan(p.start, p.window())).cost);
  return numeric::pairwise_sum(costs);
}

inline double offline_optimal_general(const LoadTrace& load, const PriceTrace& prices,
                                      double capacity) {
  require_aligned(load, prices);
  return offline_optimal_general(load.values(), prices.values(), capacity);
}

/// gamma = (cost - opt) / opt.
inline double regret_ratio(double policy_cost, double optimum) {
  if (!(optimum > 0.0))
    throw DomainError("regret ratio needs a positive offline optimum");
  return (policy_cost - optimum) / optimum;
}

/// beta = cost / opt.
inline double competitive_ratio(double policy_cost, double optimum) {
  if (!(optimum > 0.0))
    throw DomainError("competitive ratio needs a positive offline optimum");
  return policy_cost / optimum;
}

/// alpha = E[min(p1, p2)] / (2 E[p]) and beta_i = inf of the density on
/// [0, theta_i] for i = 2..T, theta_i being the threshold with i slots left.
struct RegretParams {
  double alpha = 0.0;
  std::vector<double> betas;
};

namespace detail {

inline double expected_min_of_two(const PriceDistribution& law) {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UniformPrice>) {
          return d.lo + d.width() / 3.0;
        } else if constexpr (std::is_same_v<T, PointMassPrice>) {
          return d.value;
        } else if constexpr (std::is_same_v<T, DiscretePrice>) {
          double s = 0.0;
          const auto v = d.values();
          const auto p = d.probs();
          for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = 0; j < v.size(); ++j)
              s += p[i] * p[j] * std::min(v[i], v[j]);
          return s;
        } else {
          // Nonnegative support: E[min] = integral over [0, inf) of (1 - F)^2.
          double upper = 0.0;
          for (const auto& c : d.components())
            upper = std::max(upper, c.mean + 15.0 * c.std);
          auto tail2 = [&d](double p) {
            const double s = 1.0 - d.cdf(p);
            return s * s;
          };
          return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(tail2, 0.0, upper,
                                                                                20, 1e-13);
        }
      },
      law.law());
}

/// Infimum of a continuous density over [0, theta]: a 1024-point grid plus
/// the component means and the end points, polished by golden-section search.
inline double density_infimum(const PriceDistribution& law, double theta) {
  if (!(theta > 0.0))
    return law.pdf(0.0);
  constexpr int kGrid = 1024;
  std::vector<double> xs;
  xs.reserve(kGrid + 8);
  for (int i = 0; i <= kGrid; ++i)
    xs.push_back(theta * i / kGrid);
  if (const auto* g = std::get_if<GmmModel>(&law.law()))
    for (const auto& c : g->components())
      if (c.mean > 0.0 && c.mean < theta)
        xs.push_back(c.mean);
  std::sort(xs.begin(), xs.end());
  std::size_t best = 0;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (law.pdf(xs[i]) < law.pdf(xs[best]))
      best = i;
  double lo = xs[best > 0 ? best - 1 : 0];
  double hi = xs[std::min(best + 1, xs.size() - 1)];
  double value = law.pdf(xs[best]);
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - r * (hi - lo);
  double b = lo + r * (hi - lo);
  for (int it = 0; it < 100 && hi - lo > 1e-14 * std::max(1.0, theta); ++it) {
    if (law.pdf(a) < law.pdf(b)) {
      hi = b;
      b = a;
      a = hi - r * (hi - lo);
    } else {
      lo = a;
      a = b;
      b = lo + r * (hi - lo);
    }
  }
  return std::min({value, law.pdf(0.5 * (lo + hi)), law.pdf(lo), law.pdf(hi)});
}

/// Laws without a density: the largest slope beta with F(p) >= beta * p on
/// (0, theta], which is what the bound's derivation actually consumes.
inline double cdf_slope_infimum(const PriceDistribution& law, double theta) {
  if (!(theta > 0.0))
    return 0.0;
  double best = law.cdf(theta) / theta;
  auto visit_atom = [&](double v) {
    if (v > 0.0 && v <= theta)
      best = std::min(best, law.mass_below(v) / v);
  };
  if (const auto* d = std::get_if<DiscretePrice>(&law.law()))
    for (double v : d->values())
      visit_atom(v);
  else if (const auto* p = std::get_if<PointMassPrice>(&law.law()))
    visit_atom(p->value);
  return best;
}

} // namespace detail

inline RegretParams regret_params(const PriceDistribution& law,
                                  const ThresholdSchedule& thresholds) {
  if (law.mass_below(0.0) >= 1e-9)
    throw DomainError("regret bound requires a nonnegative price law (P(p < 0) = " +
                      format_number(law.mass_below(0.0)) + ")");
  const double mean = law.mean();
  if (!(mean > 0.0))
    throw DomainError("regret bound requires a positive mean price");
  RegretParams out;
  out.alpha = detail::expected_min_of_two(law) / (2.0 * mean);
  const std::size_t horizon = thresholds.size();
  for (std::size_t remaining = 2; remaining <= horizon; ++remaining) {
    const double theta = thresholds[horizon - remaining];
    out.betas.push_back(law.is_continuous() ? detail::density_infimum(law, theta)
                                            : detail::cdf_slope_infimum(law, theta));
  }
  return out;
}

struct BoundValue {
  double value = 0.0;
  bool vacuous = false; ///< the formula went negative and bounds nothing
};

/// R(T) <= 2 / sum_{i=2..T} beta_i - T alpha^{T-1} E[p].
inline BoundValue theorem2_bound(const RegretParams& params, std::size_t horizon,
                                 double mean_price) {
  double beta_sum = 0.0;
  for (double b : params.betas)
    beta_sum += b;
  if (!(beta_sum > 0.0))
    throw DomainError("regret bound needs a positive sum of density infima");
  const double v = 2.0 / beta_sum - static_cast<double>(horizon) *
                                        std::pow(params.alpha, static_cast<double>(horizon) - 1.0) *
                                        mean_price;
  return {v, v < 0.0};
}

/// Moment form of the bound for U(a, b) prices with a > 0:
/// 4 sqrt(3) sigma / (T - 1) - T mu (1 - (mu^2 + sigma^2) / (2 sqrt(3) mu sigma))^{T-1}.
/// `allow_zero_lower` admits the a = 0 boundary within 1e-12.
inline BoundValue uniform_bound(double mu, double sigma, std::size_t horizon,
                                bool allow_zero_lower = false) {
  if (horizon < 2)
    throw DomainError("uniform bound needs a horizon of at least two slots");
  if (!(mu > 0.0) || !(sigma > 0.0))
    throw DomainError("uniform bound needs mu > 0 and sigma > 0");
  const double s3 = std::numbers::sqrt3;
  const double lower = mu - s3 * sigma;
  if (allow_zero_lower ? lower < -1e-12 : lower <= 0.0)
    throw DomainError("uniform bound needs a positive lower end, got a = " + format_number(lower));
  const double t = static_cast<double>(horizon);
  const double bracket = 1.0 - (mu * mu + sigma * sigma) / (2.0 * s3 * mu * sigma);
  const double v = 4.0 * s3 * sigma / (t - 1.0) - t * mu * std::pow(bracket, t - 1.0);
  return {v, v < 0.0};
}

struct ExactCosts {
  double online = 0.0;  ///< optimal online expected cost E[w]
  double offline = 0.0; ///< E[min of T prices]
};

namespace detail {

/// Optimal-stopping value at `depth` given the price just revealed, obtained
/// by expanding the full scenario tree below it.
inline double stopping_value(const DiscretePrice& law, std::size_t depth, std::size_t horizon,
                             double price) {
  if (depth + 1 == horizon)
    return price;
  double continuation = 0.0;
  for (std::size_t i = 0; i < law.support_size(); ++i)
    continuation += law.probs()[i] * stopping_value(law, depth + 1, horizon, law.values()[i]);
  return std::min(price, continuation);
}

inline void enumerate_minimum(const DiscretePrice& law, std::size_t remaining, double prob,
                              double running_min, double& acc) {
  if (remaining == 0) {
    acc += prob * running_min;
    return;
  }
  for (std::size_t i = 0; i < law.support_size(); ++i)
    enumerate_minimum(law, remaining - 1, prob * law.probs()[i],
                      std::min(running_min, law.values()[i]), acc);
}

} // namespace detail

/// Exact online and offline expected one-shot costs for a discrete law by
/// exhaustive expansion of all s^T price paths (s^T <= 1e7).
inline ExactCosts brute_force_expected_cost(const DiscretePrice& law, std::size_t horizon) {
  if (horizon < 1)
    throw DomainError("horizon must be at least one slot");
  if (std::pow(static_cast<double>(law.support_size()), static_cast<double>(horizon)) > 1e7)
    throw DomainError("instance too large for exhaustive enumeration");
  ExactCosts out;
  for (std::size_t i = 0; i < law.support_size(); ++i)
    out.online += law.probs()[i] * detail::stopping_value(law, 0, horizon, law.values()[i]);
  detail::enumerate_minimum(law, horizon, 1.0, numeric::kInf, out.offline);
  return out;
}

// --- Monte-Carlo studies ----------------------------------------------------

struct HorizonStats {
  std::size_t horizon = 0;
  std::size_t runs = 0;
  std::size_t gamma_runs = 0; ///< runs with a positive offline cost
  double gamma_mean = 0.0;
  double gamma_ci_lo = 0.0;
  double gamma_ci_hi = 0.0;
  double regret_mean = 0.0; ///< mean of cost - opt
  double regret_se = 0.0;
  double regret_ucl = 0.0;  ///< regret_mean + 1.96 * regret_se
  double policy_mean = 0.0;
  double offline_mean = 0.0;
  double expected_policy_cost = 0.0; ///< from the threshold recursion
  std::vector<double> policy_costs;
  std::vector<double> offline_costs;
};

struct DayRatio {
  std::size_t day = 0;
  double beta = 0.0;            ///< pieces due that day
  double beta_cumulative = 0.0; ///< pieces due up to and including that day
  double online_cost = 0.0;
  double offline_cost = 0.0;
};

struct ExperimentReport {
  std::string kind;
  std::uint64_t seed = 0;
  std::size_t n_runs = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<HorizonStats> gamma_series;
  std::vector<DayRatio> beta_series;
  std::vector<double> policy_costs;  ///< per run totals (general studies)
  std::vector<double> offline_costs;
  double mean_beta = 0.0;
  double min_beta = 0.0;
  double max_beta = 0.0;
};

/// Per-day competitive ratios of a simulated dispatch. Pieces are attributed
/// to the day (slot / 24) of their deadline; days without demand are skipped.
inline std::vector<DayRatio> daily_ratios(std::span<const PieceDecision> decisions,
                                          std::span<const double> prices) {
  const std::size_t days = (prices.size() + 23) / 24;
  std::vector<std::vector<double>> online(days), offline(days);
  for (const auto& d : decisions) {
    const auto day = d.piece.end / 24;
    online[day].push_back(d.cost());
    offline[day].push_back(d.piece.quantity *
                           offline_one_shot(prices.subspan(d.piece.start, d.piece.window())).cost);
  }
  std::vector<DayRatio> out;
  double cum_on = 0.0, cum_off = 0.0;
  for (std::size_t day = 0; day < days; ++day) {
    const double on = numeric::pairwise_sum(online[day]);
    const double off = numeric::pairwise_sum(offline[day]);
    cum_on += on;
    cum_off += off;
    if (online[day].empty() || !(off > 0.0))
      continue;
    out.push_back({day, competitive_ratio(on, off), competitive_ratio(cum_on, cum_off), on, off});
  }
  return out;
}

namespace detail {

inline void summarise_betas(ExperimentReport& r) {
  if (r.beta_series.empty())
    return;
  std::vector<double> b;
  for (const auto& d : r.beta_series)
    b.push_back(d.beta);
  r.mean_beta = numeric::mean(b);
  r.min_beta = *std::min_element(b.begin(), b.end());
  r.max_beta = *std::max_element(b.begin(), b.end());
}

} // namespace detail

/// One-shot regret study: for each horizon T, `n_runs` windows of iid prices
/// from `truth`, served by thresholds computed from `truth`.
struct OneShotStudy {
  PriceDistribution truth;
  std::vector<std::size_t> horizons;
  std::size_t n_runs = 1;
  std::uint64_t seed = 0;
};

/// General load serving on a fixed load profile with iid prices from `truth`.
struct GeneralStudy {
  PriceDistribution truth;
  std::vector<double> demand;
  double capacity = 0.0;
  std::size_t n_runs = 1;
  std::uint64_t seed = 0;
};

inline ExperimentReport monte_carlo_study(const OneShotStudy& study) {
  if (study.n_runs < 1)
    throw ExperimentError("a study needs at least one run");
  ExperimentReport rep;
  rep.kind = "oneshot";
  rep.seed = study.seed;
  rep.n_runs = study.n_runs;
  for (const auto horizon : study.horizons) {
    const auto th = compute_thresholds_iid(study.truth, horizon);
    HorizonStats hs;
    hs.horizon = horizon;
    hs.runs = study.n_runs;
    hs.expected_policy_cost = th.expected_cost;
    std::vector<double> gammas, regrets;
    std::vector<double> window(horizon);
    const OneShotLoad unit{1.0, 0, horizon - 1};
    for (std::size_t run = 0; run < study.n_runs; ++run) {
      std::mt19937_64 rng(numeric::mix_seed(numeric::mix_seed(study.seed, horizon), run));
      for (auto& p : window)
        p = study.truth.draw(rng);
      const double cost = serve_one_shot(unit, th, window).unit_cost;
      const double opt = offline_one_shot(window).cost;
      hs.policy_costs.push_back(cost);
      hs.offline_costs.push_back(opt);
      if (opt > 0.0)
        gammas.push_back(regret_ratio(cost, opt));
      regrets.push_back(cost - opt);
    }
    hs.gamma_runs = gammas.size();
    hs.gamma_mean = gammas.empty() ? std::numeric_limits<double>::quiet_NaN() : numeric::mean(gammas);
    const double gse = gammas.size() > 1 ? numeric::standard_error(gammas) : 0.0;
    hs.gamma_ci_lo = hs.gamma_mean - 1.96 * gse;
    hs.gamma_ci_hi = hs.gamma_mean + 1.96 * gse;
    hs.regret_mean = numeric::mean(regrets);
    hs.regret_se = numeric::standard_error(regrets);
    hs.regret_ucl = hs.regret_mean + 1.96 * hs.regret_se;
    hs.policy_mean = numeric::mean(hs.policy_costs);
    hs.offline_mean = numeric::mean(hs.offline_costs);
    rep.gamma_series.push_back(std::move(hs));
  }
  return rep;
}

inline ExperimentReport monte_carlo_study(const GeneralStudy& study) {
  if (study.n_runs < 1)
    throw ExperimentError("a study needs at least one run");
  if (study.demand.empty())
    throw ExperimentError("general study needs a load profile");
  ExperimentReport rep;
  rep.kind = "general";
  rep.seed = study.seed;
  rep.n_runs = study.n_runs;
  const FixedDistribution source{study.truth};
  const std::size_t days = (study.demand.size() + 23) / 24;
  std::vector<std::vector<DayRatio>> per_day(days);
  std::vector<double> prices(study.demand.size());
  for (std::size_t run = 0; run < study.n_runs; ++run) {
    std::mt19937_64 rng(numeric::mix_seed(study.seed, run));
    for (auto& p : prices)
      p = study.truth.draw(rng);
    const auto sim = run_policy(study.demand, prices, HourStamp{0}, study.capacity, source);
    rep.policy_costs.push_back(sim.total_cost);
    rep.offline_costs.push_back(offline_optimal_general(study.demand, prices, study.capacity));
    for (const auto& d : daily_ratios(sim.decisions, prices))
      per_day[d.day].push_back(d);
  }
  for (std::size_t day = 0; day < days; ++day) {
    if (per_day[day].empty())
      continue;
    std::vector<double> b, bc, on, off;
    for (const auto& d : per_day[day]) {
      b.push_back(d.beta);
      bc.push_back(d.beta_cumulative);
      on.push_back(d.online_cost);
      off.push_back(d.offline_cost);
    }
    rep.beta_series.push_back(
        {day, numeric::mean(b), numeric::mean(bc), numeric::mean(on), numeric::mean(off)});
  }
  detail::summarise_betas(rep);
  return rep;
}

/// Builds a report for a single realised dispatch (backtests).
inline ExperimentReport single_run_report(std::string kind, const SimulationResult& sim,
                                          std::span<const double> demand,
                                          std::span<const double> prices, double capacity) {
  ExperimentReport rep;
  rep.kind = std::move(kind);
  rep.n_runs = 1;
  rep.policy_costs.push_back(sim.total_cost);
  rep.offline_costs.push_back(offline_optimal_general(demand, prices, capacity));
  rep.beta_series = daily_ratios(sim.decisions, prices);
  detail::summarise_betas(rep);
  return rep;
}

inline nlohmann::json report_to_json(const ExperimentReport& r, bool include_runs = true) {
  nlohmann::json j;
  j["kind"] = r.kind;
  j["seed"] = r.seed;
  j["n_runs"] = r.n_runs;
  j["config"] = r.config;
  auto& gs = j["gamma_series"] = nlohmann::json::array();
  for (const auto& h : r.gamma_series) {
    nlohmann::json e{{"T", h.horizon},
                     {"runs", h.runs},
                     {"gamma_runs", h.gamma_runs},
                     {"gamma_mean", h.gamma_mean},
                     {"gamma_ci_lo", h.gamma_ci_lo},
                     {"gamma_ci_hi", h.gamma_ci_hi},
                     {"regret_mean", h.regret_mean},
                     {"regret_se", h.regret_se},
                     {"regret_ucl", h.regret_ucl},
                     {"policy_mean", h.policy_mean},
                     {"offline_mean", h.offline_mean},
                     {"expected_policy_cost", h.expected_policy_cost}};
    if (include_runs) {
      e["policy_costs"] = h.policy_costs;
      e["offline_costs"] = h.offline_costs;
    }
    gs.push_back(std::move(e));
  }
  auto& bs = j["beta_series"] = nlohmann::json::array();
  for (const auto& d : r.beta_series)
    bs.push_back({{"day", d.day},
                  {"beta", d.beta},
                  {"beta_cumulative", d.beta_cumulative},
                  {"online_cost", d.online_cost},
                  {"offline_cost", d.offline_cost}});
  j["policy_costs"] = r.policy_costs;
  j["offline_costs"] = r.offline_costs;
  if (!r.beta_series.empty())
    j["summary"] = {{"mean_beta", r.mean_beta}, {"min_beta", r.min_beta}, {"max_beta", r.max_beta}};
  return j;
}

/// `T,gamma_mean,gamma_ci_lo,gamma_ci_hi` rows.
inline void write_gamma_csv(std::ostream& out, const ExperimentReport& r) {
  out << "T,gamma_mean,gamma_ci_lo,gamma_ci_hi\n";
  for (const auto& h : r.gamma_series)
    out << h.horizon << ',' << format_number(h.gamma_mean) << ','
        << format_number(h.gamma_ci_lo) << ',' << format_number(h.gamma_ci_hi) << '\n';
}

/// `day,beta` rows.
inline void write_beta_csv(std::ostream& out, const ExperimentReport& r) {
  out << "day,beta\n";
  for (const auto& d : r.beta_series)
    out << d.day << ',' << format_number(d.beta) << '\n';
}

} // namespace storctl
