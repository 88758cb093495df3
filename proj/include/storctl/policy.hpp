#pragma once

// Expected-threshold policy: backward threshold recursion and the online
// buy-or-defer rule applied to decomposed one-shot pieces.

#include <concepts>
#include <map>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "storctl/decomposition.hpp"
#include "storctl/distribution.hpp"
#include "storctl/error.hpp"
#include "storctl/hourly_trace.hpp"
#include "storctl/numeric.hpp"

namespace storctl {

/// Thresholds by position in a window of length T. The final entry is +inf:
/// the last slot always buys. `expected_cost` is the policy's expected unit
/// cost over the whole window.
struct ThresholdSchedule {
  std::vector<double> thresholds;
  double expected_cost = 0.0;

  std::size_t size() const noexcept { return thresholds.size(); }
  double operator[](std::size_t j) const { return thresholds[j]; }
};

/// Backward recursion theta_{j} = E[min(p_{j+1}, theta_{j+1})] with p_{j+1}
/// drawn from `law_at(j + 1)`. `law_at` returns the law for window position j.
template <class LawAt>
ThresholdSchedule compute_thresholds(std::size_t horizon, LawAt&& law_at) {
  if (horizon < 1)
    throw DomainError("threshold horizon must be at least one slot");
  ThresholdSchedule out;
  out.thresholds.assign(horizon, numeric::kInf);
  for (std::size_t j = horizon - 1; j-- > 0;)
    out.thresholds[j] = expected_min(law_at(j + 1), out.thresholds[j + 1]);
  out.expected_cost = expected_min(law_at(0), out.thresholds[0]);
  return out;
}

template <PriceLaw D>
ThresholdSchedule compute_thresholds_iid(const D& law, std::size_t horizon) {
  return compute_thresholds(horizon, [&law](std::size_t) -> const D& { return law; });
}

/// One law per slot of the window.
template <PriceLaw D>
ThresholdSchedule compute_thresholds_timevarying(std::span<const D> laws) {
  return compute_thresholds(laws.size(), [laws](std::size_t j) -> const D& { return laws[j]; });
}

template <PriceLaw D>
ThresholdSchedule compute_thresholds_timevarying(std::span<const D> laws, std::size_t horizon) {
  if (laws.size() != horizon)
    throw InputError("expected " + std::to_string(horizon) + " slot laws, got " +
                     std::to_string(laws.size()));
  return compute_thresholds_timevarying(laws);
}

struct OneShotResult {
  Slot buy_slot = 0;
  double unit_cost = 0.0;
  double threshold = 0.0;
  bool forced = false; ///< bought in the last slot of the window
};

/// Buys at the first slot whose price is <= its threshold (ties buy).
inline OneShotResult serve_one_shot(const OneShotLoad& piece, const ThresholdSchedule& schedule,
                                    std::span<const double> window_prices) {
  const auto n = piece.window();
  if (schedule.size() != n || window_prices.size() != n)
    throw InputError("window of " + std::to_string(n) + " slots served with " +
                     std::to_string(schedule.size()) + " thresholds and " +
                     std::to_string(window_prices.size()) + " prices");
  for (std::size_t j = 0; j + 1 < n; ++j)
    if (window_prices[j] <= schedule[j])
      return {piece.start + j, window_prices[j], schedule[j], false};
  return {piece.end, window_prices[n - 1], schedule[n - 1], true};
}

/// Supplies the price law of each absolute hour. `phase` must identify hours
/// with identical future law sequences, so thresholds can be shared.
template <class S>
concept DistributionSource = requires(const S& s, HourStamp t) {
  { s.distribution(t) } -> PriceLaw;
  { s.phase(t) } -> std::convertible_to<int>;
};

/// The same law in every slot (ETA with a known distribution, plain DETA).
struct FixedDistribution {
  PriceDistribution law;

  const PriceDistribution& distribution(HourStamp) const noexcept { return law; }
  int phase(HourStamp) const noexcept { return 0; }
};

struct PieceDecision {
  OneShotLoad piece;
  Slot buy_slot = 0;
  double price = 0.0;
  double threshold = 0.0;
  bool forced = false;

  double cost() const noexcept { return piece.quantity * price; }
};

struct SimulationResult {
  DispatchSchedule schedule;
  std::vector<PieceDecision> decisions;
  double total_cost = 0.0;
};

/// Decomposes the load, serves every piece online and reassembles the
/// dispatch. `start` is the hour of slot 0.
template <DistributionSource Source>
SimulationResult run_policy(std::span<const double> demand, std::span<const double> prices,
                            HourStamp start, double capacity, const Source& source) {
  if (demand.size() != prices.size())
    throw AlignmentError("demand and price sequences differ in length");
  const auto pieces = decompose(demand, capacity);

  std::map<std::pair<std::size_t, int>, ThresholdSchedule> cache;
  SimulationResult out;
  out.decisions.reserve(pieces.size());
  std::vector<Slot> buys;
  buys.reserve(pieces.size());
  std::vector<double> costs;
  costs.reserve(pieces.size());
  for (const auto& piece : pieces) {
    const auto first = start + static_cast<std::int64_t>(piece.start);
    const auto key = std::make_pair(piece.window(), static_cast<int>(source.phase(first)));
    auto it = cache.find(key);
    if (it == cache.end()) {
      auto th = compute_thresholds(piece.window(), [&](std::size_t j) -> decltype(auto) {
        return source.distribution(first + static_cast<std::int64_t>(j));
      });
      it = cache.emplace(key, std::move(th)).first;
    }
    const auto r = serve_one_shot(piece, it->second, prices.subspan(piece.start, piece.window()));
    out.decisions.push_back({piece, r.buy_slot, r.unit_cost, r.threshold, r.forced});
    buys.push_back(r.buy_slot);
    costs.push_back(out.decisions.back().cost());
  }
  out.schedule = schedule_from_assignments(pieces, buys, demand.size());
  out.total_cost = numeric::pairwise_sum(costs);
  return out;
}

template <DistributionSource Source>
SimulationResult run_policy(const LoadTrace& load, const PriceTrace& prices, double capacity,
                            const Source& source) {
  require_aligned(load, prices);
  return run_policy(load.values(), prices.values(), load.start(), capacity, source);
}

/// `piece_id,quantity,t_start,t_end,buy_slot,price,threshold,forced` rows.
inline void write_decisions_csv(std::ostream& out, std::span<const PieceDecision> decisions) {
  out << "piece_id,quantity,t_start,t_end,buy_slot,price,threshold,forced\n";
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const auto& d = decisions[i];
    out << i << ',' << format_number(d.piece.quantity) << ',' << d.piece.start << ','
        << d.piece.end << ',' << d.buy_slot << ',' << format_number(d.price) << ','
        << format_number(d.threshold) << ',' << (d.forced ? 1 : 0) << '\n';
  }
}

} // namespace storctl
