#pragma once

// Price laws consumed by the threshold recursion. A fitted GmmModel is the
// production case; uniform, point-mass and finite discrete laws exist for
// analytic checks and exact enumeration.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "storctl/gmm.hpp"
#include "storctl/numeric.hpp"

namespace storctl {

/// What the threshold recursion needs from a price law.
template <class D>
concept PriceLaw = requires(const D& d, double x) {
  { d.mean() } -> std::convertible_to<double>;
  { d.cdf(x) } -> std::convertible_to<double>;
  { d.partial_expectation(x, x) } -> std::convertible_to<double>;
};

struct UniformPrice {
  double lo = 0.0;
  double hi = 1.0;

  UniformPrice(double a, double b) : lo(a), hi(b) {
    if (!(a < b))
      throw std::invalid_argument("uniform law needs lo < hi");
  }

  double width() const noexcept { return hi - lo; }
  double mean() const noexcept { return 0.5 * (lo + hi); }
  double pdf(double p) const noexcept { return (p < lo || p > hi) ? 0.0 : 1.0 / width(); }
  double cdf(double p) const noexcept { return std::clamp((p - lo) / width(), 0.0, 1.0); }
  double mass_below(double p) const noexcept { return cdf(p); }
  double partial_expectation(double a, double b) const noexcept {
    a = std::max(a, lo);
    b = std::min(b, hi);
    return a < b ? (b * b - a * a) / (2.0 * width()) : 0.0;
  }
};

struct PointMassPrice {
  double value = 0.0;

  double mean() const noexcept { return value; }
  double cdf(double p) const noexcept { return p >= value ? 1.0 : 0.0; }
  double mass_below(double p) const noexcept { return p > value ? 1.0 : 0.0; }
  double partial_expectation(double a, double b) const noexcept {
    return (a < value && value <= b) ? value : 0.0;
  }
};

/// Finite support law; atoms are kept sorted and merged.
class DiscretePrice {
public:
  DiscretePrice(std::vector<double> values, std::vector<double> probs) {
    if (values.empty() || values.size() != probs.size())
      throw std::invalid_argument("discrete law needs matching non-empty values/probs");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return values[a] < values[b]; });
    double total = 0.0;
    for (auto i : order) {
      if (!(probs[i] >= 0.0) || !std::isfinite(values[i]))
        throw std::invalid_argument("discrete law needs finite values and probs >= 0");
      total += probs[i];
      if (!values_.empty() && values_.back() == values[i])
        probs_.back() += probs[i];
      else {
        values_.push_back(values[i]);
        probs_.push_back(probs[i]);
      }
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("discrete probabilities must sum to 1");
  }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t support_size() const noexcept { return values_.size(); }

  double mean() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      s += values_[i] * probs_[i];
    return s;
  }
  double cdf(double p) const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size() && values_[i] <= p; ++i)
      s += probs_[i];
    return std::min(s, 1.0);
  }
  double mass_below(double p) const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size() && values_[i] < p; ++i)
      s += probs_[i];
    return std::min(s, 1.0);
  }
  /// Sum of v * P(v) over atoms in (a, b].
  double partial_expectation(double a, double b) const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (a < values_[i] && values_[i] <= b)
        s += values_[i] * probs_[i];
    return s;
  }

private:
  std::vector<double> values_;
  std::vector<double> probs_;
};

/// Value-semantic wrapper over the supported price laws.
class PriceDistribution {
public:
  using Law = std::variant<GmmModel, UniformPrice, PointMassPrice, DiscretePrice>;

  PriceDistribution(GmmModel m) : law_(std::move(m)) {}
  PriceDistribution(UniformPrice u) : law_(u) {}
  PriceDistribution(PointMassPrice p) : law_(p) {}
  PriceDistribution(DiscretePrice d) : law_(std::move(d)) {}

  const Law& law() const noexcept { return law_; }

  double mean() const {
    return std::visit([](const auto& d) { return d.mean(); }, law_);
  }
  double cdf(double p) const {
    return std::visit([p](const auto& d) { return d.cdf(p); }, law_);
  }
  double mass_below(double p) const {
    return std::visit([p](const auto& d) { return d.mass_below(p); }, law_);
  }
  double partial_expectation(double a, double b) const {
    return std::visit([a, b](const auto& d) { return d.partial_expectation(a, b); }, law_);
  }

  /// True when the law has a Lebesgue density.
  bool is_continuous() const noexcept {
    return std::holds_alternative<GmmModel>(law_) || std::holds_alternative<UniformPrice>(law_);
  }

  /// Density; only meaningful for continuous laws.
  double pdf(double p) const {
    if (const auto* g = std::get_if<GmmModel>(&law_))
      return g->pdf(p);
    if (const auto* u = std::get_if<UniformPrice>(&law_))
      return u->pdf(p);
    throw std::logic_error("pdf requested from a law without a density");
  }

  template <class Rng>
  double draw(Rng& rng) const {
    return std::visit(
        [&rng](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, GmmModel>) {
            const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            double acc = 0.0;
            const auto comps = d.components();
            std::size_t k = 0;
            for (; k + 1 < comps.size(); ++k)
              if (u < (acc += comps[k].weight))
                break;
            return std::normal_distribution<double>(comps[k].mean, comps[k].std)(rng);
          } else if constexpr (std::is_same_v<T, UniformPrice>) {
            return std::uniform_real_distribution<double>(d.lo, d.hi)(rng);
          } else if constexpr (std::is_same_v<T, PointMassPrice>) {
            return d.value;
          } else {
            const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            double acc = 0.0;
            const auto v = d.values();
            const auto p = d.probs();
            for (std::size_t i = 0; i + 1 < v.size(); ++i)
              if (u < (acc += p[i]))
                return v[i];
            return v.back();
          }
        },
        law_);
  }

private:
  Law law_;
};

/// E[min(p, theta)]: the expected cost of buying now if p <= theta and paying
/// theta otherwise. Integrates over the full support of the law.
template <PriceLaw D>
double expected_min(const D& law, double theta) {
  if (theta == numeric::kInf)
    return law.mean();
  return law.partial_expectation(-numeric::kInf, theta) + theta * (1.0 - law.cdf(theta));
}

} // namespace storctl
