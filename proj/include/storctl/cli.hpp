#pragma once

// Command-line front end: fit, backtest, montecarlo, size and synth.
// Options may also come from a JSON config whose keys are the long flag
// names; flags given on the command line win.

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "storctl/storctl.hpp"

namespace storctl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// Price mixture used when no model or trace is supplied.
inline GmmModel reference_price_model() {
  return GmmModel({{0.5, 22.0, 3.0}, {0.35, 32.0, 5.0}, {0.15, 55.0, 12.0}});
}

struct SynthSpec {
  std::string kind = "price"; ///< price or load
  std::size_t slots = 720;
  std::string start = "2019-08-01T00:00:00";
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<int> peak_hours;
  double peak_offset = 0.0;
  double daily_amplitude = 0.0; ///< sinusoid peaking at 18:00
};

inline std::vector<GaussianComponent> synth_components(const SynthSpec& s) {
  auto w = s.weights, m = s.means, d = s.stds;
  if (m.empty()) {
    if (s.kind == "load") {
      w = {1.0};
      m = {10.0};
      d = {2.0};
    } else {
      const auto ref = reference_price_model();
      for (const auto& c : ref.components()) {
        w.push_back(c.weight);
        m.push_back(c.mean);
        d.push_back(c.std);
      }
    }
  }
  if (w.empty())
    w.assign(m.size(), 1.0 / static_cast<double>(m.size()));
  if (w.size() != m.size() || d.size() != m.size())
    throw InputError("--weights, --means and --stds must have the same length");
  std::vector<GaussianComponent> out;
  double total = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (!(w[k] >= 0.0) || !(d[k] >= 0.0))
      throw InputError("synthetic components need weights >= 0 and stds >= 0");
    total += w[k];
    out.push_back({w[k], m[k], d[k]});
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw InputError("synthetic component weights must sum to 1");
  return out;
}

/// Seeded per-slot draws from the configured mixture, shifted by the hour
/// modulation. Loads are clipped at zero.
inline std::vector<double> synthesize(const SynthSpec& s, HourStamp start, std::uint64_t seed) {
  if (s.kind != "price" && s.kind != "load")
    throw InputError("--kind must be 'price' or 'load'");
  if (s.slots < 1)
    throw InputError("--slots must be at least 1");
  std::array<bool, 24> peak{};
  for (int h : s.peak_hours) {
    if (h < 0 || h > 23)
      throw InputError("peak hour " + std::to_string(h) + " outside 0..23");
    peak[static_cast<std::size_t>(h)] = true;
  }
  const auto comps = synth_components(s);
  auto values = sample_mixture(comps, s.slots, seed);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const int h = (start + static_cast<std::int64_t>(i)).hour_of_day();
    if (peak[static_cast<std::size_t>(h)])
      values[i] += s.peak_offset;
    if (s.daily_amplitude != 0.0)
      values[i] += s.daily_amplitude * std::sin(2.0 * std::numbers::pi * (h - 12) / 24.0);
    if (s.kind == "load")
      values[i] = std::max(0.0, values[i]);
  }
  return values;
}

/// Everything a command may read. Unused fields are ignored per command.
struct RunConfig {
  std::string prices;
  std::string loads;
  std::string model;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool reproducible = false;

  std::string variant = "deta";
  std::optional<double> capacity;
  std::optional<double> capacity_fraction;
  int k_max = 8;
  int train_days = 21;
  int test_days = 0; ///< 0: everything after the training window
  std::optional<double> percentile;
  double em_tol = 1e-6;
  int em_max_iter = 500;

  std::string mode = "oneshot";
  std::vector<std::size_t> horizons{2, 4, 8, 16, 32};
  std::size_t runs = 1000;
  std::size_t days = 30;
  std::vector<double> uniform;

  std::vector<double> grid;
  std::vector<double> grid_fractions;
  std::vector<double> pi_b;
  std::size_t scenarios = 50;

  SynthSpec synth;
  std::string file;
};

namespace detail {

inline json meta(const RunConfig& c) {
  json m{{"tool", "storctl"}};
  if (!c.reproducible) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::ostringstream os;
    os << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
    m["generated_at"] = os.str();
  }
  return m;
}

inline fs::path out_dir(const RunConfig& c) {
  fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f)
    throw InputError("cannot write " + p.string());
  return f;
}

inline void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

inline EmConfig em_config(const RunConfig& c) {
  EmConfig e;
  e.tol = c.em_tol;
  e.max_iter = c.em_max_iter;
  e.init_seed = c.seed;
  e.validate();
  return e;
}

inline double resolve_capacity(const RunConfig& c, double peak_demand) {
  if (c.capacity.has_value() == c.capacity_fraction.has_value())
    throw InputError("give exactly one of --capacity and --capacity-fraction");
  if (c.capacity) {
    if (!(*c.capacity >= 0.0) || !std::isfinite(*c.capacity))
      throw InputError("--capacity must be finite and >= 0");
    return *c.capacity;
  }
  if (!(*c.capacity_fraction > 0.0) || !std::isfinite(*c.capacity_fraction))
    throw InputError("--capacity-fraction must be positive");
  return *c.capacity_fraction * peak_demand;
}

inline json config_echo(const RunConfig& c) {
  json j{{"seed", c.seed}, {"variant", c.variant}, {"k_max", c.k_max},
         {"train_days", c.train_days}, {"test_days", c.test_days}};
  if (c.capacity)
    j["capacity"] = *c.capacity;
  if (c.capacity_fraction)
    j["capacity_fraction"] = *c.capacity_fraction;
  if (c.percentile)
    j["percentile"] = *c.percentile;
  return j;
}

/// Price law for montecarlo and size: --uniform, then --model, then a DETA
/// fit on --prices, then the reference mixture.
inline PriceDistribution price_law(const RunConfig& c) {
  if (!c.uniform.empty()) {
    if (c.uniform.size() != 2)
      throw InputError("--uniform takes LO HI");
    try {
      return UniformPrice(c.uniform[0], c.uniform[1]);
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }
  if (!c.model.empty()) {
    std::ifstream in(c.model);
    if (!in)
      throw InputError("cannot open " + c.model);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw InputError(c.model + ": " + e.what());
    }
    if (j.contains("variant")) {
      auto spec = estimator_from_json(j);
      if (spec.variant != Variant::deta)
        throw InputError("--model must hold a single mixture (variant deta)");
      return spec.models.front();
    }
    return gmm_from_json(j);
  }
  if (!c.prices.empty()) {
    const auto trace = load_price_trace(c.prices);
    return fit_estimator(Variant::deta, trace, c.k_max, em_config(c)).models.front();
  }
  return reference_price_model();
}

} // namespace detail

inline int cmd_fit(const RunConfig& c, std::ostream& out) {
  if (c.prices.empty())
    throw InputError("fit needs --prices");
  const auto trace = load_price_trace(c.prices);
  const auto variant = parse_variant(c.variant);
  const auto cfg = detail::em_config(c);
  auto spec = fit_estimator(variant, trace, c.k_max, cfg, c.percentile);

  // The BIC table is for the pooled sample with the same seed as plain DETA.
  EmConfig pooled = cfg;
  pooled.init_seed = numeric::mix_seed(cfg.init_seed, 1000);
  const auto sel =
      select_model(trace.values(), capped_components(c.k_max, trace.size()), pooled);

  const auto dir = detail::out_dir(c);
  auto j = estimator_to_json(spec);
  j["meta"] = detail::meta(c);
  detail::write_json(dir / "model.json", j);
  auto csv = detail::open_out(dir / "bic.csv");
  csv << "K,log_likelihood,bic,iterations,converged\n";
  out << "K  BIC\n";
  for (const auto& cand : sel.candidates) {
    if (!cand.report) {
      csv << cand.components << ",,,,\n";
      out << cand.components << "  failed: " << cand.error << '\n';
      continue;
    }
    const auto& r = *cand.report;
    csv << cand.components << ',' << format_number(r.log_likelihood) << ','
        << format_number(r.bic) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << '\n';
    out << cand.components << "  " << format_number(r.bic) << '\n';
  }
  out << "selected K = " << sel.selected_components() << "; wrote " << (dir / "model.json").string()
      << '\n';
  return 0;
}

inline json backtest_one(Variant variant, const RunConfig& c, const TraceSplit<PriceTrace>& ps,
                         const TraceSplit<LoadTrace>& ls, double capacity, const fs::path& dir) {
  const auto spec = fit_estimator(variant, ps.train, c.k_max, detail::em_config(c), c.percentile);
  const auto sim = run_policy(ls.test, ps.test, capacity, spec);
  const auto feasible = verify_feasible(sim.schedule, ls.test, capacity);
  if (!feasible)
    throw ExperimentError("policy produced an infeasible dispatch: " + feasible.detail);
  auto rep = single_run_report("backtest", sim, ls.test.values(), ps.test.values(), capacity);
  rep.seed = c.seed;
  rep.config = detail::config_echo(c);
  rep.config["variant"] = std::string(to_string(variant));
  rep.config["capacity_resolved"] = capacity;

  const std::string tag(to_string(variant));
  auto j = report_to_json(rep);
  j["estimator"] = estimator_to_json(spec);
  j["test_start"] = format_timestamp(ps.test.start());
  j["test_slots"] = ps.test.size();
  j["online_cost"] = sim.total_cost;
  j["offline_cost"] = rep.offline_costs.front();
  j["competitive_ratio"] = competitive_ratio(sim.total_cost, rep.offline_costs.front());
  j["forced_purchases"] = std::count_if(sim.decisions.begin(), sim.decisions.end(),
                                        [](const auto& d) { return d.forced; });
  j["feasible"] = true;
  j["meta"] = detail::meta(c);
  detail::write_json(dir / ("backtest_" + tag + ".json"), j);
  auto beta = detail::open_out(dir / ("beta_" + tag + ".csv"));
  write_beta_csv(beta, rep);
  auto dec = detail::open_out(dir / ("decisions_" + tag + ".csv"));
  write_decisions_csv(dec, sim.decisions);
  return j;
}

inline int cmd_backtest(const RunConfig& c, std::ostream& out) {
  if (c.prices.empty() || c.loads.empty())
    throw InputError("backtest needs --prices and --loads");
  auto prices = load_price_trace(c.prices);
  auto loads = load_load_trace(c.loads);
  require_aligned(loads, prices);
  const double capacity = detail::resolve_capacity(c, loads.peak());
  if (c.test_days < 0)
    throw InputError("--test-days must be >= 0");
  if (c.test_days > 0) {
    const auto need = static_cast<std::size_t>(c.train_days + c.test_days) * 24;
    if (prices.size() < need)
      throw InsufficientDataError("traces cover " + std::to_string(prices.size()) +
                                  " slots; the protocol needs " + std::to_string(need));
    prices = prices.slice(0, need);
    loads = loads.slice(0, need);
  }
  const auto ps = split_train_test(prices, c.train_days);
  const auto ls = split_train_test(loads, c.train_days);

  std::vector<Variant> variants;
  if (storctl::detail::iequals(c.variant, "all"))
    variants = {Variant::deta, Variant::deta_p, Variant::deta_i};
  else
    variants = {parse_variant(c.variant)};
  const auto dir = detail::out_dir(c);
  for (auto v : variants) {
    const auto j = backtest_one(v, c, ps, ls, capacity, dir);
    out << to_string(v) << ": beta = " << format_number(j["competitive_ratio"].get<double>())
        << " over " << j["beta_series"].size() << " day(s), B = " << format_number(capacity)
        << '\n';
  }
  return 0;
}

inline int cmd_montecarlo(const RunConfig& c, std::ostream& out) {
  const auto law = detail::price_law(c);
  const auto dir = detail::out_dir(c);
  ExperimentReport rep;
  json extra = json::object();
  if (c.mode == "oneshot") {
    if (c.horizons.empty())
      throw InputError("--horizons must not be empty");
    for (auto t : c.horizons)
      if (t < 1)
        throw InputError("horizons must be >= 1");
    rep = monte_carlo_study(OneShotStudy{law, c.horizons, c.runs, c.seed});
    auto& bounds = extra["bounds"] = json::array();
    for (auto t : c.horizons) {
      json b{{"T", t}};
      try {
        const auto th = compute_thresholds_iid(law, t);
        const auto v = theorem2_bound(regret_params(law, th), t, law.mean());
        b["value"] = v.value;
        b["vacuous"] = v.vacuous;
      } catch (const DomainError& e) {
        b["value"] = nullptr;
        b["reason"] = e.what();
      }
      bounds.push_back(std::move(b));
    }
    auto csv = detail::open_out(dir / "gamma.csv");
    write_gamma_csv(csv, rep);
    for (const auto& h : rep.gamma_series)
      out << "T=" << h.horizon << "  gamma=" << format_number(h.gamma_mean)
          << "  R=" << format_number(h.regret_mean) << '\n';
  } else if (c.mode == "general") {
    std::vector<double> demand;
    if (!c.loads.empty()) {
      const auto lt = load_load_trace(c.loads);
      demand.assign(lt.values().begin(), lt.values().end());
    } else {
      SynthSpec s;
      s.kind = "load";
      s.slots = c.days * 24;
      s.daily_amplitude = 4.0;
      demand = synthesize(s, parse_timestamp(s.start), numeric::mix_seed(c.seed, 0x10ad));
    }
    const double capacity =
        detail::resolve_capacity(c, *std::max_element(demand.begin(), demand.end()));
    rep = monte_carlo_study(GeneralStudy{law, demand, capacity, c.runs, c.seed});
    extra["capacity_resolved"] = capacity;
    auto csv = detail::open_out(dir / "beta.csv");
    write_beta_csv(csv, rep);
    out << "mean beta = " << format_number(rep.mean_beta) << " (min "
        << format_number(rep.min_beta) << ", max " << format_number(rep.max_beta) << ")\n";
  } else {
    throw InputError("--mode must be 'oneshot' or 'general'");
  }
  rep.config = detail::config_echo(c);
  rep.config["mode"] = c.mode;
  rep.config["runs"] = c.runs;
  auto j = report_to_json(rep);
  j.update(extra);
  j["meta"] = detail::meta(c);
  detail::write_json(dir / "montecarlo.json", j);
  return 0;
}

inline int cmd_size(const RunConfig& c, std::ostream& out) {
  if (c.loads.empty())
    throw InputError("size needs --loads");
  const auto loads = load_load_trace(c.loads);
  std::vector<double> grid = c.grid;
  if (!c.grid_fractions.empty()) {
    if (!grid.empty())
      throw InputError("give only one of --grid and --grid-fractions");
    for (double f : c.grid_fractions)
      grid.push_back(f * loads.peak());
  }
  if (grid.empty())
    for (int i = 0; i <= 10; ++i)
      grid.push_back(0.2 * i * loads.peak());

  SizingCurve curve;
  if (!c.prices.empty() && c.model.empty() && c.uniform.empty()) {
    curve = min_cost_curve(loads, load_price_trace(c.prices), grid);
  } else {
    curve = min_cost_curve(loads.values(), detail::price_law(c), grid, c.scenarios, c.seed);
  }
  const auto dir = detail::out_dir(c);
  auto csv = detail::open_out(dir / "sizing.csv");
  write_sizing_csv(csv, curve);
  json j{{"non_increasing", curve.is_non_increasing()},
         {"concave", curve.is_concave()},
         {"diminishing_returns", curve.has_diminishing_returns()}};
  auto& opt = j["optimal_capacity"] = json::array();
  for (double pi : c.pi_b) {
    const auto r = optimal_capacity(curve, pi);
    opt.push_back({{"pi_b", r.pi_b}, {"B_star", r.B_star}});
    out << "pi_b=" << format_number(r.pi_b) << "  B*=" << format_number(r.B_star) << '\n';
  }
  j["config"] = {{"seed", c.seed}, {"scenarios", c.scenarios}, {"grid", grid}};
  j["meta"] = detail::meta(c);
  detail::write_json(dir / "sizing.json", j);
  out << "wrote " << (dir / "sizing.csv").string() << '\n';
  return 0;
}

inline int cmd_synth(const RunConfig& c, std::ostream& out) {
  const auto start = parse_timestamp(c.synth.start);
  const auto values = synthesize(c.synth, start, c.seed);
  const auto dir = detail::out_dir(c);
  const auto path = dir / (c.file.empty() ? c.synth.kind + "s.csv" : c.file);
  auto f = detail::open_out(path);
  if (c.synth.kind == "load")
    write_trace(f, LoadTrace(start, values));
  else
    write_trace(f, PriceTrace(start, values));
  out << "wrote " << values.size() << " slots to " << path.string() << '\n';
  return 0;
}

namespace detail {

inline std::vector<int> parse_hours(const std::vector<std::string>& items) {
  std::vector<int> hours;
  for (const auto& raw : items) {
    const auto dash = raw.find('-');
    try {
      if (dash == std::string::npos) {
        hours.push_back(std::stoi(raw));
      } else {
        const int a = std::stoi(raw.substr(0, dash));
        const int b = std::stoi(raw.substr(dash + 1));
        for (int h = a; h <= b; ++h)
          hours.push_back(h);
      }
    } catch (const std::logic_error&) {
      throw InputError("bad hour specification '" + raw + "'");
    }
  }
  return hours;
}

/// Feeds config-file values into options the command line left unset.
inline void apply_config(CLI::App& sub, const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw InputError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("config " + path + ": " + e.what());
  }
  if (!j.is_object())
    throw InputError("config " + path + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    auto* opt = sub.get_option_no_throw("--" + name);
    if (!opt || name == "config")
      throw InputError("config " + path + ": unknown key '" + key + "' for " + sub.get_name());
    if (opt->count() > 0)
      continue;
    std::vector<std::string> items;
    auto scalar = [](const json& v) {
      return v.is_string() ? v.get<std::string>() : v.dump();
    };
    if (value.is_array())
      for (const auto& v : value)
        items.push_back(scalar(v));
    else
      items.push_back(scalar(value));
    opt->clear();
    opt->add_result(items);
    opt->run_callback();
  }
}

} // namespace detail

/// Runs one command line (without the program name). Returns the exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Storage control backtesting toolkit", "storctl"};
  app.require_subcommand(1);
  RunConfig c;
  std::string config_path;
  std::vector<std::string> peak_hours;
  double capacity = 0.0, capacity_fraction = 0.0, percentile = 0.0;

  auto common = [&](CLI::App* s) {
    s->add_option("--out", c.out, "output directory");
    s->add_option("--seed", c.seed, "random seed");
    s->add_option("--config", config_path, "JSON config; command-line flags take precedence");
    s->add_flag("--reproducible", c.reproducible, "omit wall-clock metadata");
  };
  auto io = [&](CLI::App* s) {
    s->add_option("--prices", c.prices, "price CSV (timestamp,price)");
    s->add_option("--loads", c.loads, "load CSV (timestamp,demand)");
  };
  auto fitting = [&](CLI::App* s) {
    s->add_option("--variant", c.variant, "deta, deta_p or deta_i");
    s->add_option("--k-max", c.k_max, "largest mixture size tried")->check(CLI::PositiveNumber);
    s->add_option("--percentile", percentile, "peak cut as a quantile of hourly means");
    s->add_option("--em-tol", c.em_tol, "EM log-likelihood tolerance");
    s->add_option("--em-max-iter", c.em_max_iter, "EM iteration cap");
  };
  auto sizing_opts = [&](CLI::App* s) {
    s->add_option("--capacity", capacity, "storage capacity in energy units");
    s->add_option("--capacity-fraction", capacity_fraction,
                  "storage capacity as a fraction of peak hourly demand");
  };

  auto* fit = app.add_subcommand("fit", "fit a price model and write the BIC table");
  common(fit);
  io(fit);
  fitting(fit);

  auto* bt = app.add_subcommand("backtest", "train on the first weeks, dispatch the rest");
  common(bt);
  io(bt);
  fitting(bt);
  sizing_opts(bt);
  bt->add_option("--train-days", c.train_days, "training window in days");
  bt->add_option("--test-days", c.test_days, "test window in days (0: remainder)");

  auto* mc = app.add_subcommand("montecarlo", "regret and competitive-ratio studies");
  common(mc);
  io(mc);
  sizing_opts(mc);
  mc->add_option("--model", c.model, "price model JSON");
  mc->add_option("--uniform", c.uniform, "uniform price law LO HI")->expected(2);
  mc->add_option("--k-max", c.k_max, "largest mixture size when fitting --prices");
  mc->add_option("--mode", c.mode, "oneshot or general");
  mc->add_option("--horizons", c.horizons, "one-shot window lengths")->delimiter(',');
  mc->add_option("--runs", c.runs, "runs per setting")->check(CLI::PositiveNumber);
  mc->add_option("--days", c.days, "days of synthetic load for general mode");

  auto* sz = app.add_subcommand("size", "minimum cost against storage capacity");
  common(sz);
  io(sz);
  sz->add_option("--model", c.model, "price model JSON");
  sz->add_option("--uniform", c.uniform, "uniform price law LO HI")->expected(2);
  sz->add_option("--k-max", c.k_max, "largest mixture size when fitting");
  sz->add_option("--grid", c.grid, "capacity grid")->delimiter(',');
  sz->add_option("--grid-fractions", c.grid_fractions, "capacity grid as fractions of peak demand")
      ->delimiter(',');
  sz->add_option("--pi-b", c.pi_b, "amortized storage prices")->delimiter(',');
  sz->add_option("--scenarios", c.scenarios, "price scenarios when a law is given");

  auto* sy = app.add_subcommand("synth", "write a synthetic hourly trace");
  common(sy);
  sy->add_option("--kind", c.synth.kind, "price or load");
  sy->add_option("--slots", c.synth.slots, "number of hours");
  sy->add_option("--start", c.synth.start, "first timestamp");
  sy->add_option("--weights", c.synth.weights, "component weights")->delimiter(',');
  sy->add_option("--means", c.synth.means, "component means")->delimiter(',');
  sy->add_option("--stds", c.synth.stds, "component standard deviations")->delimiter(',');
  sy->add_option("--peak-hours", peak_hours, "hours (or ranges like 17-20) to shift")
      ->delimiter(',');
  sy->add_option("--peak-offset", c.synth.peak_offset, "shift added in peak hours");
  sy->add_option("--daily-amplitude", c.synth.daily_amplitude, "daily sinusoid amplitude");
  sy->add_option("--file", c.file, "output file name inside --out");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    CLI::App* sub = app.get_subcommands().front();
    if (!config_path.empty())
      detail::apply_config(*sub, config_path);
    auto given = [sub](const char* name) {
      auto* o = sub->get_option_no_throw(name);
      return o && o->count() > 0;
    };
    if (given("--capacity"))
      c.capacity = capacity;
    if (given("--capacity-fraction"))
      c.capacity_fraction = capacity_fraction;
    if (given("--percentile")) {
      if (!(percentile > 0.0 && percentile <= 1.0))
        throw InputError("--percentile must lie in (0, 1]");
      c.percentile = percentile;
    }
    c.synth.peak_hours = detail::parse_hours(peak_hours);

    if (sub == fit)
      return cmd_fit(c, out);
    if (sub == bt)
      return cmd_backtest(c, out);
    if (sub == mc)
      return cmd_montecarlo(c, out);
    if (sub == sz)
      return cmd_size(c, out);
    return cmd_synth(c, out);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << '\n';
    return 2;
  } catch (const FitError& e) {
    err << "fit error: " << e.what() << '\n';
    return 3;
  } catch (const ExperimentError& e) {
    err << "experiment error: " << e.what() << '\n';
    return 4;
  }
}

} // namespace storctl::cli
