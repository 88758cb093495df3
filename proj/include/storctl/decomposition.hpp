#pragma once

// One-shot load decomposition. A storage of capacity B lets the demand level
// y of the cumulative curve D be bought at any slot t with D(t) + B >= y and
// no later than the slot where D first reaches y. Sweeping y upward splits
// every demand increment into pieces that share one such window.

#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "storctl/error.hpp"
#include "storctl/hourly_trace.hpp"
#include "storctl/numeric.hpp"

namespace storctl {

using Slot = std::size_t;

/// Prefix sums of demand; D(t) = sum_{tau <= t} d(tau).
struct CumulativeDemand {
  std::vector<double> levels;

  double operator()(Slot t) const { return levels.at(t); }
  std::size_t size() const noexcept { return levels.size(); }
};

/// D(t) + B.
struct ShiftedDemand {
  std::vector<double> levels;
  double capacity = 0.0;
};

/// A quantity that must be bought in exactly one slot of [start, end].
struct OneShotLoad {
  double quantity = 0.0;
  Slot start = 0;
  Slot end = 0;

  std::size_t window() const noexcept { return end - start + 1; }
  bool operator==(const OneShotLoad&) const = default;
};

inline CumulativeDemand accumulate(std::span<const double> demand) {
  CumulativeDemand out;
  out.levels.reserve(demand.size());
  double acc = 0.0;
  for (double d : demand)
    out.levels.push_back(acc += d);
  return out;
}

inline CumulativeDemand accumulate(const LoadTrace& load) { return accumulate(load.values()); }

inline ShiftedDemand shift(const CumulativeDemand& d, double capacity) {
  ShiftedDemand out{d.levels, capacity};
  for (auto& v : out.levels)
    v += capacity;
  return out;
}

namespace detail {

inline constexpr double kSliverQuantity = 1e-12;

/// Adjusts the last piece so the left-to-right floating sum of the pieces
/// reproduces `target` bit for bit. When the partial sum sits exactly on a
/// rounding tie the target may be unreachable through the last piece alone;
/// the previous piece then moves by one ulp of the partial sum and the search
/// repeats.
inline void close_sum(std::span<OneShotLoad> pieces, double target) {
  if (pieces.empty())
    return;
  double& last = pieces.back().quantity;
  for (int attempt = 0; attempt < 16; ++attempt) {
    double prefix = 0.0;
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i)
      prefix += pieces[i].quantity;
    last = target - prefix;
    for (int guard = 0; guard < 8 && prefix + last != target; ++guard)
      last += target - (prefix + last);
    for (int guard = 0; guard < 64 && prefix + last != target; ++guard)
      last = std::nextafter(last, prefix + last < target ? numeric::kInf : -numeric::kInf);
    if (prefix + last == target || pieces.size() < 2)
      return;
    pieces[pieces.size() - 2].quantity += std::nextafter(prefix, numeric::kInf) - prefix;
  }
}

} // namespace detail

/// Level sweep over the cumulative demand curve. Pieces are emitted ordered by
/// end slot, then by start slot. Pieces smaller than 1e-12 are folded into a
/// neighbour of the same end slot.
inline std::vector<OneShotLoad> decompose(std::span<const double> demand, double capacity) {
  if (!(capacity >= 0.0) || !std::isfinite(capacity))
    throw std::invalid_argument("storage capacity must be finite and >= 0");
  const auto cum = accumulate(demand);
  std::vector<OneShotLoad> pieces;
  Slot earliest = 0;
  double below = 0.0; // D(t_e - 1)
  for (Slot te = 0; te < demand.size(); ++te) {
    const double top = cum.levels[te];
    if (demand[te] <= 0.0) {
      below = top;
      continue;
    }
    const auto first = pieces.size();
    double y = below;
    while (y < top) {
      while (cum.levels[earliest] + capacity <= y)
        ++earliest;
      const double ceiling = std::min(top, cum.levels[earliest] + capacity);
      const double q = ceiling - y;
      if (q < detail::kSliverQuantity && pieces.size() > first)
        pieces.back().quantity += q;
      else
        pieces.push_back({q, earliest, te});
      y = ceiling;
    }
    // A leading sliver is merged forward into the next piece of this slot.
    if (pieces.size() > first + 1 && pieces[first].quantity < detail::kSliverQuantity) {
      pieces[first + 1].quantity += pieces[first].quantity;
      pieces.erase(pieces.begin() + static_cast<std::ptrdiff_t>(first));
    }
    detail::close_sum(std::span(pieces).subspan(first), demand[te]);
    below = top;
  }
  return pieces;
}

inline std::vector<OneShotLoad> decompose(const LoadTrace& load, double capacity) {
  return decompose(load.values(), capacity);
}

/// Per-slot grid purchase g, charge b, discharge c and storage level s.
struct DispatchSchedule {
  std::vector<double> purchase;
  std::vector<double> charge;
  std::vector<double> discharge;
  std::vector<double> storage;

  std::size_t size() const noexcept { return purchase.size(); }

  /// Energy bought from the grid in slot t, g(t) + b(t).
  double bought(Slot t) const { return purchase[t] + charge[t]; }
};

enum class Violation {
  none,
  negative_flow,
  demand_balance,
  storage_negative,
  storage_over_capacity,
  storage_accounting,
};

inline const char* to_string(Violation v) noexcept {
  switch (v) {
  case Violation::none:
    return "none";
  case Violation::negative_flow:
    return "negative purchase, charge or discharge";
  case Violation::demand_balance:
    return "g(t) + c(t) != d(t)";
  case Violation::storage_negative:
    return "storage level below zero";
  case Violation::storage_over_capacity:
    return "storage level above capacity";
  case Violation::storage_accounting:
    return "storage level inconsistent with charge/discharge history";
  }
  return "unknown";
}

struct FeasibilityReport {
  Violation violation = Violation::none;
  std::optional<Slot> slot;
  std::string detail;

  bool ok() const noexcept { return violation == Violation::none; }
  explicit operator bool() const noexcept { return ok(); }
};

/// Checks the schedule against per-slot demand balance and the capacity
/// window 0 <= sum (b - c) <= B, reporting the first violation found.
inline FeasibilityReport verify_feasible(const DispatchSchedule& s, std::span<const double> demand,
                                         double capacity, double tol = 1e-9) {
  const auto n = demand.size();
  if (s.purchase.size() != n || s.charge.size() != n || s.discharge.size() != n ||
      s.storage.size() != n)
    throw InputError("schedule length does not match the load trace (" +
                     std::to_string(s.purchase.size()) + " vs " + std::to_string(n) + ")");
  double level = 0.0;
  for (Slot t = 0; t < n; ++t) {
    auto fail = [&](Violation v, double lhs, double rhs) {
      return FeasibilityReport{v, t,
                               std::string(to_string(v)) + " at slot " + std::to_string(t) +
                                   " (" + format_number(lhs) + " vs " + format_number(rhs) + ")"};
    };
    if (s.purchase[t] < -tol || s.charge[t] < -tol || s.discharge[t] < -tol)
      return fail(Violation::negative_flow,
                  std::min({s.purchase[t], s.charge[t], s.discharge[t]}), 0.0);
    if (std::abs(s.purchase[t] + s.discharge[t] - demand[t]) > tol)
      return fail(Violation::demand_balance, s.purchase[t] + s.discharge[t], demand[t]);
    level += s.charge[t] - s.discharge[t];
    if (std::abs(level - s.storage[t]) > tol)
      return fail(Violation::storage_accounting, s.storage[t], level);
    if (level < -tol)
      return fail(Violation::storage_negative, level, 0.0);
    if (level > capacity + tol)
      return fail(Violation::storage_over_capacity, level, capacity);
  }
  return {};
}

inline FeasibilityReport verify_feasible(const DispatchSchedule& s, const LoadTrace& load,
                                         double capacity, double tol = 1e-9) {
  return verify_feasible(s, load.values(), capacity, tol);
}

/// Reassembles a global schedule from one purchase slot per piece.
inline DispatchSchedule schedule_from_assignments(std::span<const OneShotLoad> pieces,
                                                  std::span<const Slot> buy_slots,
                                                  std::size_t n_slots) {
  if (pieces.size() != buy_slots.size())
    throw std::invalid_argument("one purchase slot per piece is required");
  DispatchSchedule s{std::vector<double>(n_slots, 0.0), std::vector<double>(n_slots, 0.0),
                     std::vector<double>(n_slots, 0.0), std::vector<double>(n_slots, 0.0)};
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& p = pieces[i];
    const auto at = buy_slots[i];
    if (at < p.start || at > p.end || p.end >= n_slots)
      throw InputError("piece " + std::to_string(i) + " bought at slot " + std::to_string(at) +
                       " outside its window [" + std::to_string(p.start) + ", " +
                       std::to_string(p.end) + "]");
    if (at == p.end) {
      s.purchase[at] += p.quantity;
    } else {
      s.charge[at] += p.quantity;
      s.discharge[p.end] += p.quantity;
    }
  }
  double level = 0.0;
  for (Slot t = 0; t < n_slots; ++t)
    s.storage[t] = (level += s.charge[t] - s.discharge[t]);
  return s;
}

/// `quantity,t_start,t_end` rows.
inline void write_pieces_csv(std::ostream& out, std::span<const OneShotLoad> pieces) {
  out << "quantity,t_start,t_end\n";
  for (const auto& p : pieces)
    out << format_number(p.quantity) << ',' << p.start << ',' << p.end << '\n';
}

} // namespace storctl
