#pragma once

// Data-driven estimators: one mixture for every hour (DETA), one per hour of
// day (DETA^P), or one each for detected peak and off-peak hours (DETA^I).

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "storctl/error.hpp"
#include "storctl/gmm.hpp"
#include "storctl/hourly_trace.hpp"
#include "storctl/numeric.hpp"

namespace storctl {

enum class Variant { deta, deta_p, deta_i };

inline std::string_view to_string(Variant v) noexcept {
  switch (v) {
  case Variant::deta:
    return "deta";
  case Variant::deta_p:
    return "deta_p";
  case Variant::deta_i:
    return "deta_i";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (detail::iequals(s, "deta"))
    return Variant::deta;
  if (detail::iequals(s, "deta_p") || detail::iequals(s, "deta-p"))
    return Variant::deta_p;
  if (detail::iequals(s, "deta_i") || detail::iequals(s, "deta-i"))
    return Variant::deta_i;
  throw InputError("unknown estimator variant '" + std::string(s) + "'");
}

/// Peak hours P; every other hour of the day is off-peak.
struct PeriodLabeling {
  std::array<bool, 24> peak{};

  bool is_peak(int hour) const { return peak.at(static_cast<std::size_t>(hour)); }

  std::vector<int> peak_hours() const {
    std::vector<int> out;
    for (int h = 0; h < 24; ++h)
      if (peak[static_cast<std::size_t>(h)])
        out.push_back(h);
    return out;
  }

  std::vector<int> offpeak_hours() const {
    std::vector<int> out;
    for (int h = 0; h < 24; ++h)
      if (!peak[static_cast<std::size_t>(h)])
        out.push_back(h);
    return out;
  }

  bool operator==(const PeriodLabeling&) const = default;
};

struct HourlyMeans {
  std::array<double, 24> mean{};
  std::array<std::size_t, 24> count{};
  double global_mean = 0.0;
};

inline HourlyMeans hourly_means(const PriceTrace& train) {
  if (train.size() < 24)
    throw InsufficientDataError("period detection needs at least one full day of prices");
  HourlyMeans out;
  std::array<std::vector<double>, 24> by_hour;
  for (std::size_t i = 0; i < train.size(); ++i)
    by_hour[static_cast<std::size_t>(train.timestamp(i).hour_of_day())].push_back(train[i]);
  for (std::size_t h = 0; h < 24; ++h) {
    out.count[h] = by_hour[h].size();
    out.mean[h] = numeric::mean(by_hour[h]);
  }
  out.global_mean = numeric::mean(train.values());
  return out;
}

/// Hour h is peak iff its training mean strictly exceeds the cut. Without a
/// percentile the cut is the global training mean; with one it is that
/// quantile of the 24 hourly means.
inline PeriodLabeling detect_periods(const PriceTrace& train,
                                     std::optional<double> percentile = std::nullopt) {
  if (percentile && !(*percentile > 0.0 && *percentile <= 1.0))
    throw std::invalid_argument("percentile must lie in (0, 1]");
  const auto means = hourly_means(train);
  const double cut =
      percentile ? numeric::quantile({means.mean.begin(), means.mean.end()}, *percentile)
                 : means.global_mean;
  PeriodLabeling out;
  for (std::size_t h = 0; h < 24; ++h)
    out.peak[h] = means.mean[h] > cut;
  return out;
}

/// A fitted estimator. Layout of `models`: DETA one model; DETA^P indexed by
/// hour of day; DETA^I off-peak first, then peak when any peak hour exists.
struct EstimatorSpec {
  Variant variant = Variant::deta;
  std::vector<GmmModel> models;
  std::optional<PeriodLabeling> labeling;
  std::optional<double> percentile;
  std::vector<int> selected_components;

  std::size_t model_index(HourStamp t) const {
    switch (variant) {
    case Variant::deta:
      return 0;
    case Variant::deta_p:
      return static_cast<std::size_t>(t.hour_of_day());
    case Variant::deta_i:
      return (models.size() > 1 && labeling->is_peak(t.hour_of_day())) ? 1 : 0;
    }
    return 0;
  }

  const GmmModel& distribution(HourStamp t) const { return models.at(model_index(t)); }

  int phase(HourStamp t) const noexcept {
    return variant == Variant::deta ? 0 : t.hour_of_day();
  }
};

/// Per-model component cap: at most one component per ten samples.
inline int capped_components(int k_max, std::size_t n_samples) {
  const int by_data = static_cast<int>(n_samples / 10);
  return std::max(1, std::min(k_max, by_data));
}

inline EstimatorSpec fit_estimator(Variant variant, const PriceTrace& train, int k_max,
                                   const EmConfig& cfg,
                                   std::optional<double> percentile = std::nullopt) {
  EstimatorSpec spec;
  spec.variant = variant;
  std::vector<std::vector<double>> groups;
  switch (variant) {
  case Variant::deta:
    groups.emplace_back(train.values().begin(), train.values().end());
    break;
  case Variant::deta_p:
    if (train.size() < 24)
      throw InsufficientDataError("DETA_P needs at least one full day of prices");
    groups.resize(24);
    for (std::size_t i = 0; i < train.size(); ++i)
      groups[static_cast<std::size_t>(train.timestamp(i).hour_of_day())].push_back(train[i]);
    break;
  case Variant::deta_i: {
    spec.labeling = detect_periods(train, percentile);
    spec.percentile = percentile;
    groups.resize(2);
    for (std::size_t i = 0; i < train.size(); ++i)
      groups[spec.labeling->is_peak(train.timestamp(i).hour_of_day()) ? 1 : 0].push_back(train[i]);
    if (groups[1].empty())
      groups.pop_back();
    break;
  }
  }
  for (std::size_t g = 0; g < groups.size(); ++g) {
    EmConfig local = cfg;
    local.init_seed = numeric::mix_seed(cfg.init_seed, 1000 + g);
    auto sel = select_model(groups[g], capped_components(k_max, groups[g].size()), local);
    spec.selected_components.push_back(sel.selected_components());
    spec.models.push_back(std::move(sel.best.model));
  }
  return spec;
}

inline nlohmann::json estimator_to_json(const EstimatorSpec& spec) {
  nlohmann::json j;
  j["variant"] = std::string(to_string(spec.variant));
  j["models"] = nlohmann::json::array();
  for (const auto& m : spec.models)
    j["models"].push_back(m);
  if (spec.labeling)
    j["peak_hours"] = spec.labeling->peak_hours();
  if (spec.percentile)
    j["percentile"] = *spec.percentile;
  j["selected_components"] = spec.selected_components;
  return j;
}

inline EstimatorSpec estimator_from_json(const nlohmann::json& j) {
  try {
    EstimatorSpec spec;
    spec.variant = parse_variant(j.at("variant").get<std::string>());
    for (const auto& m : j.at("models"))
      spec.models.push_back(gmm_from_json(m));
    if (j.contains("peak_hours")) {
      PeriodLabeling lab;
      for (int h : j.at("peak_hours").get<std::vector<int>>())
        lab.peak.at(static_cast<std::size_t>(h)) = true;
      spec.labeling = lab;
    }
    if (j.contains("percentile"))
      spec.percentile = j.at("percentile").get<double>();
    if (j.contains("selected_components"))
      spec.selected_components = j.at("selected_components").get<std::vector<int>>();
    const std::size_t expected =
        spec.variant == Variant::deta ? 1 : spec.variant == Variant::deta_p ? 24 : 0;
    if ((expected && spec.models.size() != expected) ||
        (spec.variant == Variant::deta_i &&
         (!spec.labeling || spec.models.empty() || spec.models.size() > 2)))
      throw InputError("estimator JSON has the wrong model count for its variant");
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad estimator JSON: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw InputError(std::string("bad estimator JSON: ") + e.what());
  }
}

} // namespace storctl
