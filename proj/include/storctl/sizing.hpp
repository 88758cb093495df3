#pragma once

// Minimum serving cost as a function of storage capacity, and the capacity
// at which the marginal saving falls to the amortized storage price.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "storctl/distribution.hpp"
#include "storctl/error.hpp"
#include "storctl/evaluation.hpp"
#include "storctl/hourly_trace.hpp"
#include "storctl/numeric.hpp"

namespace storctl {

struct SizingPoint {
  double capacity = 0.0;
  double min_cost = 0.0;
};

/// MinC on a capacity grid. `marginal_savings[j]` is
/// -(MinC(B_{j+1}) - MinC(B_j)) / (B_{j+1} - B_j).
struct SizingCurve {
  std::vector<SizingPoint> points;
  std::vector<double> marginal_savings;

  bool is_non_increasing(double tol = 1e-9) const {
    for (std::size_t j = 1; j < points.size(); ++j)
      if (points[j].min_cost > points[j - 1].min_cost + tol)
        return false;
    return true;
  }

  /// Second differences of MinC over the grid are <= tol.
  bool is_concave(double tol = 1e-9) const {
    for (std::size_t j = 1; j < marginal_savings.size(); ++j)
      if (marginal_savings[j - 1] - marginal_savings[j] > tol)
        return false;
    return true;
  }

  /// Marginal savings never grow with capacity.
  bool has_diminishing_returns(double tol = 1e-9) const {
    for (std::size_t j = 1; j < marginal_savings.size(); ++j)
      if (marginal_savings[j] > marginal_savings[j - 1] + tol)
        return false;
    return true;
  }
};

namespace detail {

inline void check_grid(std::span<const double> grid) {
  if (grid.size() < 2)
    throw ExperimentError("capacity grid needs at least two points");
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (!(grid[j] >= 0.0) || !std::isfinite(grid[j]))
      throw ExperimentError("capacity grid values must be finite and >= 0");
    if (j > 0 && !(grid[j] > grid[j - 1]))
      throw ExperimentError("capacity grid must be strictly increasing");
  }
}

inline SizingCurve assemble_curve(std::span<const double> grid, std::vector<double> costs) {
  SizingCurve c;
  for (std::size_t j = 0; j < grid.size(); ++j)
    c.points.push_back({grid[j], costs[j]});
  for (std::size_t j = 0; j + 1 < grid.size(); ++j)
    c.marginal_savings.push_back(-(costs[j + 1] - costs[j]) / (grid[j + 1] - grid[j]));
  return c;
}

} // namespace detail

inline SizingCurve min_cost_curve(std::span<const double> demand, std::span<const double> prices,
                                  std::span<const double> grid) {
  detail::check_grid(grid);
  std::vector<double> costs;
  for (double b : grid)
    costs.push_back(offline_optimal_general(demand, prices, b));
  return detail::assemble_curve(grid, std::move(costs));
}

inline SizingCurve min_cost_curve(const LoadTrace& load, const PriceTrace& prices,
                                  std::span<const double> grid) {
  require_aligned(load, prices);
  return min_cost_curve(load.values(), prices.values(), grid);
}

/// Scenario average: MinC per sampled iid price path, averaged over paths.
inline SizingCurve min_cost_curve(std::span<const double> demand, const PriceDistribution& law,
                                  std::span<const double> grid, std::size_t n_scenarios,
                                  std::uint64_t seed) {
  detail::check_grid(grid);
  if (n_scenarios < 1)
    throw ExperimentError("need at least one price scenario");
  std::vector<std::vector<double>> per_grid(grid.size());
  std::vector<double> prices(demand.size());
  for (std::size_t s = 0; s < n_scenarios; ++s) {
    std::mt19937_64 rng(numeric::mix_seed(seed, s));
    for (auto& p : prices)
      p = law.draw(rng);
    for (std::size_t j = 0; j < grid.size(); ++j)
      per_grid[j].push_back(offline_optimal_general(demand, prices, grid[j]));
  }
  std::vector<double> costs;
  for (const auto& v : per_grid)
    costs.push_back(numeric::mean(v));
  return detail::assemble_curve(grid, std::move(costs));
}

struct SizingResult {
  double B_star = 0.0;
  double pi_b = 0.0;
};

/// Walks the grid while the marginal saving of the next step is >= pi_b.
inline SizingResult optimal_capacity(const SizingCurve& curve, double pi_b) {
  if (!(pi_b >= 0.0))
    throw ExperimentError("amortized storage cost must be >= 0");
  if (curve.points.empty())
    throw ExperimentError("empty sizing curve");
  std::size_t at = 0;
  for (std::size_t j = 0; j < curve.marginal_savings.size(); ++j)
    if (curve.marginal_savings[j] >= pi_b)
      at = j + 1;
  return {curve.points[at].capacity, pi_b};
}

/// `B,min_cost,marginal_saving` rows; the last point has no forward saving.
inline void write_sizing_csv(std::ostream& out, const SizingCurve& c) {
  out << "B,min_cost,marginal_saving\n";
  for (std::size_t j = 0; j < c.points.size(); ++j) {
    out << format_number(c.points[j].capacity) << ',' << format_number(c.points[j].min_cost) << ',';
    if (j < c.marginal_savings.size())
      out << format_number(c.marginal_savings[j]);
    out << '\n';
  }
}

} // namespace storctl
