#pragma once

// One-dimensional Gaussian mixtures of the price distribution: density
// evaluation, EM fitting, BIC model selection and seeded sampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "storctl/error.hpp"
#include "storctl/numeric.hpp"

namespace storctl {

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double std = 1.0;

  bool operator==(const GaussianComponent&) const = default;
};

namespace detail {

/// P(za < Z <= zb) for a standard normal, evaluated on the tail that keeps
/// the subtraction well conditioned.
inline double normal_mass(double za, double zb) noexcept {
  if (za >= zb)
    return 0.0;
  if (za > 0.0)
    return numeric::normal_cdf(-za) - numeric::normal_cdf(-zb);
  return numeric::normal_cdf(zb) - numeric::normal_cdf(za);
}

inline double log_normal_density(double x, double mean, double sd) noexcept {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

} // namespace detail

/// A validated K-component mixture. Weights sum to one within 1e-9 and every
/// standard deviation is strictly positive.
class GmmModel {
public:
  static constexpr double kWeightTolerance = 1e-9;

  explicit GmmModel(std::vector<GaussianComponent> components)
      : components_(std::move(components)) {
    if (components_.empty())
      throw std::invalid_argument("mixture needs at least one component");
    double total = 0.0;
    for (const auto& c : components_) {
      if (!std::isfinite(c.weight) || !std::isfinite(c.mean) || !std::isfinite(c.std))
        throw std::invalid_argument("mixture parameters must be finite");
      if (c.weight < 0.0 || c.weight > 1.0)
        throw std::invalid_argument("mixture weight outside [0,1]");
      if (!(c.std > 0.0))
        throw std::invalid_argument("mixture standard deviation must be positive");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > kWeightTolerance)
      throw std::invalid_argument("mixture weights sum to " + std::to_string(total));
  }

  /// Single Gaussian.
  static GmmModel normal(double mean, double sd) { return GmmModel({{1.0, mean, sd}}); }

  std::span<const GaussianComponent> components() const noexcept { return components_; }
  std::size_t size() const noexcept { return components_.size(); }

  double pdf(double p) const noexcept {
    double s = 0.0;
    for (const auto& c : components_)
      s += c.weight * numeric::normal_pdf((p - c.mean) / c.std) / c.std;
    return s;
  }

  double cdf(double p) const noexcept {
    double s = 0.0;
    for (const auto& c : components_)
      s += c.weight * numeric::normal_cdf((p - c.mean) / c.std);
    return std::clamp(s, 0.0, 1.0);
  }

  /// P(p < x); equal to cdf for a continuous law.
  double mass_below(double x) const noexcept { return cdf(x); }

  /// Integral of p * pdf(p) over [a, b]; either end may be infinite.
  double partial_expectation(double a, double b) const noexcept {
    if (!(a < b))
      return 0.0;
    double s = 0.0;
    for (const auto& c : components_) {
      const double za = (a - c.mean) / c.std;
      const double zb = (b - c.mean) / c.std;
      s += c.weight * (c.mean * detail::normal_mass(za, zb) +
                       c.std * (numeric::normal_pdf(za) - numeric::normal_pdf(zb)));
    }
    return s;
  }

  double mean() const noexcept {
    double s = 0.0;
    for (const auto& c : components_)
      s += c.weight * c.mean;
    return s;
  }

  double variance() const noexcept {
    const double m = mean();
    double s = 0.0;
    for (const auto& c : components_)
      s += c.weight * (c.std * c.std + (c.mean - m) * (c.mean - m));
    return s;
  }

  /// Components ordered by ascending mean; the canonical serialized form.
  GmmModel canonical() const {
    auto sorted = components_;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.mean < b.mean; });
    return GmmModel(std::move(sorted));
  }

  bool operator==(const GmmModel&) const = default;

private:
  std::vector<GaussianComponent> components_;
};

/// Draws `n` values: a component by weight, then a Gaussian draw. Components
/// with zero standard deviation yield their mean exactly.
inline std::vector<double> sample_mixture(std::span<const GaussianComponent> components,
                                          std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pick(0.0, 1.0);
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& c : components)
    cumulative.push_back(acc += c.weight);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = pick(rng) * acc;
    auto k = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    k = std::min(k, components.size() - 1);
    const auto& c = components[k];
    if (c.std > 0.0)
      out.push_back(std::normal_distribution<double>(c.mean, c.std)(rng));
    else
      out.push_back(c.mean);
  }
  return out;
}

inline std::vector<double> sample(const GmmModel& model, std::size_t n, std::uint64_t seed) {
  return sample_mixture(model.components(), n, seed);
}

/// Sum over samples of ln(sum_k pi_k N(p_i | mu_k, sigma_k)).
inline double log_likelihood(const GmmModel& model, std::span<const double> samples) {
  std::vector<double> terms;
  terms.reserve(samples.size());
  std::vector<double> logs(model.size());
  for (double x : samples) {
    double top = -numeric::kInf;
    for (std::size_t k = 0; k < model.size(); ++k) {
      const auto& c = model.components()[k];
      logs[k] = std::log(c.weight) + detail::log_normal_density(x, c.mean, c.std);
      top = std::max(top, logs[k]);
    }
    double s = 0.0;
    for (double l : logs)
      s += std::exp(l - top);
    terms.push_back(top + std::log(s));
  }
  return numeric::pairwise_sum(terms);
}

/// Free parameters of a K-component 1-D mixture: K-1 weights, K means, K stds.
constexpr std::size_t free_parameters(std::size_t components) noexcept {
  return 3 * components - 1;
}

/// k ln t - 2 ln L.
inline double bic(double log_likelihood, std::size_t n_samples, std::size_t n_params) {
  if (n_samples < 1)
    throw std::invalid_argument("BIC needs at least one sample");
  return static_cast<double>(n_params) * std::log(static_cast<double>(n_samples)) -
         2.0 * log_likelihood;
}

struct EmConfig {
  double tol = 1e-6;          ///< stop when |delta log-likelihood| < tol
  int max_iter = 500;
  double sigma_floor = 1e-6;  ///< relative to the sample standard deviation
  std::uint64_t init_seed = 0;

  void validate() const {
    if (!(tol > 0.0) || max_iter < 1 || !(sigma_floor > 0.0))
      throw std::invalid_argument("EmConfig requires tol > 0, max_iter >= 1, sigma_floor > 0");
  }
};

struct FitReport {
  GmmModel model;
  double log_likelihood = 0.0;
  double bic = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Log-likelihood at initialisation followed by one entry per EM step.
  std::vector<double> log_likelihood_trace;
  /// Largest |sum_k gamma_ik - 1| seen over all samples and iterations.
  double max_responsibility_defect = 0.0;
  /// Largest |sum_k N_k - t| seen over all E-steps.
  double max_mass_defect = 0.0;
};

namespace detail {

inline double sigma_floor_for(std::span<const double> samples, double relative) {
  const double sd = std::sqrt(numeric::population_variance(samples));
  return sd > 0.0 ? relative * sd : 1e-9;
}

/// k-means++ seeding followed by one hard-assignment pass.
inline std::vector<GaussianComponent> initialise(std::span<const double> xs, std::size_t k,
                                                 std::uint64_t seed, double floor) {
  std::mt19937_64 rng(seed);
  std::vector<double> centres;
  centres.push_back(xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)]);
  std::vector<double> d2(xs.size());
  while (centres.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double best = numeric::kInf;
      for (double c : centres)
        best = std::min(best, (xs[i] - c) * (xs[i] - c));
      d2[i] = best;
      total += best;
    }
    if (!(total > 0.0))
      throw DegenerateFitError("fewer distinct sample values than mixture components");
    const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
    double acc = 0.0;
    std::size_t chosen = xs.size();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      acc += d2[i];
      if (d2[i] > 0.0 && acc >= r) {
        chosen = i;
        break;
      }
    }
    if (chosen == xs.size()) // r landed on the rounding slack at the top
      for (std::size_t i = xs.size(); i-- > 0;)
        if (d2[i] > 0.0) {
          chosen = i;
          break;
        }
    centres.push_back(xs[chosen]);
  }

  std::vector<std::vector<double>> members(k);
  for (double x : xs) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (std::abs(x - centres[j]) < std::abs(x - centres[best]))
        best = j;
    members[best].push_back(x);
  }
  std::vector<GaussianComponent> out;
  for (const auto& m : members) {
    if (m.empty())
      throw DegenerateFitError("empty cluster after k-means++ seeding");
    out.push_back({static_cast<double>(m.size()) / static_cast<double>(xs.size()),
                   numeric::mean(m), std::max(std::sqrt(numeric::population_variance(m)), floor)});
  }
  return out;
}

} // namespace detail

/// Classical EM for a K-component mixture.
inline FitReport em_fit(std::span<const double> samples, int components, const EmConfig& cfg) {
  cfg.validate();
  if (components < 1)
    throw std::invalid_argument("component count must be at least 1");
  const auto k = static_cast<std::size_t>(components);
  const std::size_t n = samples.size();
  if (n < k)
    throw InsufficientSamplesError("need at least " + std::to_string(k) + " samples, got " +
                                   std::to_string(n));
  for (double x : samples)
    if (!std::isfinite(x))
      throw InputError("non-finite sample passed to EM");

  const double floor = detail::sigma_floor_for(samples, cfg.sigma_floor);
  auto params = detail::initialise(samples, k, cfg.init_seed, floor);

  std::vector<double> gamma(n * k);
  std::vector<double> logs(k);
  std::vector<double> point_ll(n);
  double max_resp_defect = 0.0;
  double max_mass_defect = 0.0;

  // Fills gamma for the current parameters and returns their log-likelihood.
  auto e_step = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      double top = -numeric::kInf;
      for (std::size_t j = 0; j < k; ++j) {
        logs[j] = std::log(params[j].weight) +
                  detail::log_normal_density(samples[i], params[j].mean, params[j].std);
        top = std::max(top, logs[j]);
      }
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j)
        s += (gamma[i * k + j] = std::exp(logs[j] - top));
      double check = 0.0;
      for (std::size_t j = 0; j < k; ++j)
        check += (gamma[i * k + j] /= s);
      max_resp_defect = std::max(max_resp_defect, std::abs(check - 1.0));
      point_ll[i] = top + std::log(s);
    }
    return numeric::pairwise_sum(point_ll);
  };

  auto m_step = [&] {
    std::vector<double> mass(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j)
        mass[j] += gamma[i * k + j];
    double total_mass = 0.0;
    for (double m : mass)
      total_mass += m;
    max_mass_defect = std::max(max_mass_defect, std::abs(total_mass - static_cast<double>(n)));
    for (std::size_t j = 0; j < k; ++j) {
      if (mass[j] < 1e-12)
        throw DegenerateFitError("component " + std::to_string(j) +
                                 " lost its responsibility mass");
      double mu = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        mu += gamma[i * k + j] * samples[i];
      mu /= mass[j];
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        var += gamma[i * k + j] * (samples[i] - mu) * (samples[i] - mu);
      var /= mass[j];
      params[j] = {mass[j] / static_cast<double>(n), mu, std::max(std::sqrt(var), floor)};
    }
  };

  std::vector<double> trace;
  double ll = e_step();
  trace.push_back(ll);
  int iterations = 0;
  bool converged = false;
  while (iterations < cfg.max_iter) {
    m_step();
    const double next = e_step();
    trace.push_back(next);
    ++iterations;
    const double delta = next - ll;
    ll = next;
    if (std::abs(delta) < cfg.tol) {
      converged = true;
      break;
    }
  }

  // Renormalise away the last few ulps so the model validates exactly.
  double wsum = 0.0;
  for (const auto& c : params)
    wsum += c.weight;
  for (auto& c : params)
    c.weight = std::min(1.0, c.weight / wsum);

  FitReport report{GmmModel(std::move(params)).canonical(),
                   ll,
                   bic(ll, n, free_parameters(k)),
                   iterations,
                   converged,
                   std::move(trace),
                   max_resp_defect,
                   max_mass_defect};
  return report;
}

struct CandidateFit {
  int components = 0;
  std::optional<FitReport> report; ///< empty when the fit failed
  std::string error;
};

struct ModelSelection {
  FitReport best;
  std::vector<CandidateFit> candidates;

  int selected_components() const noexcept { return static_cast<int>(best.model.size()); }
};

/// Fits K = 1..k_max and keeps the minimum-BIC model (ties go to smaller K).
/// Each K uses its own seed derived from cfg.init_seed.
inline ModelSelection select_model(std::span<const double> samples, int k_max,
                                   const EmConfig& cfg) {
  if (k_max < 1)
    throw std::invalid_argument("k_max must be at least 1");
  std::vector<CandidateFit> candidates;
  std::optional<std::size_t> best;
  std::string last_error;
  for (int k = 1; k <= k_max; ++k) {
    EmConfig local = cfg;
    local.init_seed = numeric::mix_seed(cfg.init_seed, static_cast<std::uint64_t>(k));
    CandidateFit cand{k, std::nullopt, {}};
    try {
      cand.report = em_fit(samples, k, local);
    } catch (const FitError& e) {
      cand.error = e.what();
      last_error = e.what();
    }
    candidates.push_back(std::move(cand));
    const auto& placed = candidates.back();
    if (placed.report &&
        (!best || placed.report->bic < candidates[*best].report->bic))
      best = candidates.size() - 1;
  }
  if (!best)
    throw FitError("every candidate component count failed: " + last_error);
  return {*candidates[*best].report, std::move(candidates)};
}

inline void to_json(nlohmann::json& j, const GmmModel& model) {
  j = nlohmann::json::object();
  auto& arr = j["components"] = nlohmann::json::array();
  const auto sorted = model.canonical();
  for (const auto& c : sorted.components())
    arr.push_back({{"weight", c.weight}, {"mean", c.mean}, {"std", c.std}});
}

inline GmmModel gmm_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("components") || !j.at("components").is_array())
    throw InputError("model JSON must be an object with a 'components' array");
  std::vector<GaussianComponent> comps;
  try {
    for (const auto& c : j.at("components"))
      comps.push_back({c.at("weight").get<double>(), c.at("mean").get<double>(),
                       c.at("std").get<double>()});
    return GmmModel(std::move(comps)).canonical();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad model JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("invalid model: ") + e.what());
  }
}

} // namespace storctl
