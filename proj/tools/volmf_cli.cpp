// volmf command-line front end.
//
// Every subcommand writes its results into --out-dir together with a
// `<subcommand>.manifest.json` holding the resolved option values. Passing a
// manifest (or any flat JSON object of option values) back through --config
// reproduces the run; explicit flags override config values.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "volmf/volmf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFailure = 1;

// Options of one subcommand plus the hooks that dump their resolved values.
struct Command {
  CLI::App* app = nullptr;
  std::vector<std::pair<std::string, std::function<json()>>> values;
  std::vector<std::string> input_keys;
  std::vector<std::string> seed_keys;
  std::function<std::vector<std::string>()> run;

  template <typename T>
  CLI::Option* opt(const std::string& name, T& var, const std::string& desc) {
    values.emplace_back(name, [&var] { return json(var); });
    return app->add_option("--" + name, var, desc)->capture_default_str();
  }
  CLI::Option* flag(const std::string& name, bool& var, const std::string& desc) {
    values.emplace_back(name, [&var] { return json(var); });
    return app->add_flag("--" + name, var, desc);
  }
  CLI::Option* input(const std::string& name, std::string& var, const std::string& desc) {
    input_keys.push_back(name);
    return opt(name, var, desc)->required();
  }

  json resolved() const {
    json j = json::object();
    for (const auto& [k, f] : values) j[k] = f();
    return j;
  }
};

struct IoError : volmf::Error {
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

// Relative inputs that do not exist are looked up under $VOLMF_DATA_DIR.
std::string resolve_input(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || fs::exists(path)) return path;
  if (const char* dir = std::getenv("VOLMF_DATA_DIR")) {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

std::ifstream open_in(const std::string& given) {
  const std::string path = resolve_input(given);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input '" + path + "'");
  return in;
}

class Outputs {
 public:
  explicit Outputs(std::string dir) : dir_(std::move(dir)) {}

  template <typename Writer>
  void write(const std::string& name, Writer&& writer) {
    std::ostringstream os;
    writer(os);
    put(name, os.str());
  }
  void write_json(const std::string& name, const json& j) { put(name, j.dump(2) + "\n"); }

  const std::vector<std::string>& names() const { return names_; }

 private:
  void put(const std::string& name, const std::string& text) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    const fs::path p = fs::path(dir_) / name;
    std::ofstream out(p, std::ios::binary);
    if (!(out << text)) throw IoError("cannot write '" + p.string() + "'");
    names_.push_back(name);
  }
  std::string dir_;
  std::vector<std::string> names_;
};

volmf::ReturnSeries load_returns(const std::string& path, int dt) {
  auto in = open_in(path);
  auto r = volmf::read_returns_csv(in, dt);
  if (r.values.empty()) throw volmf::ValidationError("no returns in '" + path + "'");
  return r;
}

volmf::TickSeries load_ticks(const std::string& path) {
  auto in = open_in(path);
  return volmf::parse_ticks(in);
}

volmf::OutlierMode parse_outlier_mode(const std::string& s) {
  if (s == "positive-only") return volmf::OutlierMode::positive_only;
  if (s == "symmetric") return volmf::OutlierMode::symmetric;
  throw volmf::ValidationError("unknown outlier mode '" + s + "'");
}

// mfdfa options shared by `mfdfa` and `rolling --estimator mfdfa`.
struct MfdfaOptions {
  int order = 3;
  int s_min = 20;
  int s_max = 100;
  int fit_min = 20;
  int fit_max = 100;
  double q_max = 25.0;
  double q_step = 0.2;
  double degree_q = 4.0;

  void add(Command& c) {
    c.opt("order", order, "detrending polynomial order");
    c.opt("s-min", s_min, "smallest scale");
    c.opt("s-max", s_max, "largest scale (every integer in between is used)");
    c.opt("fit-min", fit_min, "lower end of the scaling fit range");
    c.opt("fit-max", fit_max, "upper end of the scaling fit range");
    c.opt("q-max", q_max, "q grid spans [-q-max, q-max]");
    c.opt("q-step", q_step, "q grid spacing");
    c.opt("degree-q", degree_q, "moment used for delta_h and delta_alpha");
  }

  volmf::mfdfa::Config config() const {
    if (!(q_step > 0.0) || !(q_max > 0.0)) throw volmf::ValidationError("q grid needs positive step and range");
    const long k = std::lround(q_max / q_step);
    if (std::abs(static_cast<double>(k) * q_step - q_max) > 1e-9)
      throw volmf::ValidationError("q-max must be a multiple of q-step");
    volmf::mfdfa::Config c;
    c.q_grid.clear();
    for (long i = -k; i <= k; ++i) c.q_grid.push_back(static_cast<double>(i) * q_step);
    c.s_grid = volmf::mfdfa::integer_scales(s_min, s_max);
    c.detrend_order = order;
    c.fit_range = {fit_min, fit_max};
    c.degree_q = degree_q;
    volmf::mfdfa::validate(c);
    return c;
  }
};

struct FitOptions {
  int starts = 5;
  int restarts = 2;
  std::uint64_t seed = 20200606;

  void add(Command& c) {
    c.opt("starts", starts, "optimizer multi-starts");
    c.opt("restarts", restarts, "restarts after a failed polish");
    c.opt("seed", seed, "seed for start perturbations");
    c.seed_keys.push_back("seed");
  }
  volmf::FitConfig config() const {
    volmf::FitConfig f;
    f.starts = starts;
    f.max_restarts = restarts;
    f.seed = seed;
    return f;
  }
};

std::string error_json(const std::string& kind, const std::string& message, long line = -1) {
  json e{{"kind", kind}, {"message", message}};
  if (line >= 0) e["line"] = line;
  return json{{"error", e}}.dump();
}

// Splices config values into argv right after the subcommand, skipping keys
// the user gave explicitly.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;

  auto in = open_in(path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw volmf::ParseError(0, std::string("config: ") + e.what());
  }
  if (cfg.contains("subcommand") && cfg.contains("config")) cfg = cfg["config"];
  if (!cfg.is_object()) throw volmf::ValidationError("config must be a JSON object");

  std::size_t sub = 1;
  while (sub < args.size() && args[sub].rfind("-", 0) == 0) ++sub;
  if (sub >= args.size()) return args;

  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    for (std::size_t i = sub + 1; i < args.size(); ++i)
      if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  auto scalar = [](const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) return volmf::io::fmt(v.get<double>());
    throw volmf::ValidationError("config: unsupported value " + v.dump());
  };

  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config" || value.is_null() || given(key)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back("--" + key);
    } else if (value.is_array()) {
      if (value.empty()) continue;
      extra.push_back("--" + key);
      for (const auto& v : value) extra.push_back(scalar(v));
    } else {
      extra.push_back("--" + key);
      extra.push_back(scalar(value));
    }
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volatility and multifractal analysis of financial time series"};
  app.set_version_flag("--version", std::string(volmf::kVersion));
  app.require_subcommand(1);

  std::string out_dir = ".";
  unsigned threads = 0;
  std::string config_path;
  std::map<std::string, Command> commands;

  auto make = [&](const std::string& name, const std::string& desc) -> Command& {
    Command& c = commands[name];
    c.app = app.add_subcommand(name, desc);
    c.opt("out-dir", out_dir, "directory for result files");
    c.app->add_option("--config", config_path, "JSON file of option values or a run manifest");
    return c;
  };

  // ingest
  std::string ticks_path;
  int dt = 1440;
  double threshold = 40.0;
  std::string outlier_mode = "positive-only";
  bool no_filter = false;
  {
    auto& c = make("ingest", "resample ticks to bars and build percent log-returns");
    c.input("input", ticks_path, "tick CSV: unix_seconds,price,amount");
    c.opt("dt", dt, "bar length in minutes")->check(CLI::PositiveNumber);
    c.opt("threshold", threshold, "outlier threshold in percent");
    c.opt("outlier-mode", outlier_mode, "positive-only or symmetric")
        ->check(CLI::IsMember({"positive-only", "symmetric"}));
    c.flag("no-filter", no_filter, "keep every return");
    c.run = [&] {
      const auto ticks = load_ticks(ticks_path);
      const auto prices = volmf::resample_last(ticks, dt);
      auto returns = volmf::log_returns(prices);
      if (!no_filter) returns = volmf::filter_outliers(returns, threshold, parse_outlier_mode(outlier_mode));
      Outputs out(out_dir);
      out.write("prices.csv", [&](std::ostream& os) { volmf::write_csv(os, prices); });
      out.write("returns.csv", [&](std::ostream& os) { volmf::write_csv(os, returns); });
      out.write_json("ingest.json", {{"ticks", ticks.records.size()},
                                     {"input_was_unordered", ticks.input_was_unordered},
                                     {"prices", volmf::to_json(prices)},
                                     {"returns", volmf::to_json(returns)}});
      return out.names();
    };
  }

  // stats
  std::string returns_path;
  double s0 = 0.0;
  std::string rbar_mode = "mean-abs";
  {
    auto& c = make("stats", "descriptive statistics with jackknife errors and the volatility series");
    c.input("input", returns_path, "returns CSV");
    c.opt("s0", s0, "initial value of the volatility series");
    c.opt("rbar-mode", rbar_mode, "mean-abs or mean")->check(CLI::IsMember({"mean-abs", "mean"}));
    c.run = [&] {
      const auto r = load_returns(returns_path, 1440);
      const auto d = volmf::descriptive(r.values);
      const auto v = volmf::volatility_series(
          r.values, s0, rbar_mode == "mean" ? volmf::RbarMode::mean : volmf::RbarMode::mean_abs);
      Outputs out(out_dir);
      out.write_json("stats.json", {{"descriptive", volmf::to_json(d)}, {"r_bar", v.r_bar}});
      out.write("stats.csv", [&](std::ostream& os) { volmf::write_csv(os, d); });
      out.write("volatility.csv", [&](std::ostream& os) { volmf::write_csv(os, v); });
      return out.names();
    };
  }

  // agg-gauss
  std::string agg_ticks;
  std::vector<int> dts{1, 5, 10, 15, 30, 60, 120, 180, 240, 360, 480, 720, 1440};
  int agg_fit_min = 1, agg_fit_max = 1440;
  std::size_t min_nobs = 200;
  {
    auto& c = make("agg-gauss", "kurtosis across sampling periods with a log-log slope");
    c.input("input", agg_ticks, "tick CSV");
    c.opt("dts", dts, "sampling periods in minutes")->expected(1, -1);
    c.opt("fit-min", agg_fit_min, "smallest period in the slope fit");
    c.opt("fit-max", agg_fit_max, "largest period in the slope fit");
    c.opt("min-nobs", min_nobs, "minimum returns per row");
    c.run = [&] {
      const auto scan =
          volmf::agg_gaussianity_scan(load_ticks(agg_ticks), dts, {agg_fit_min, agg_fit_max}, min_nobs);
      Outputs out(out_dir);
      out.write("agg_gauss.csv", [&](std::ostream& os) { volmf::write_csv(os, scan); });
      out.write_json("agg_gauss.json", volmf::to_json(scan));
      return out.names();
    };
  }

  // tgarch
  std::string tg_input, tg_dist = "student-t";
  FitOptions tg_fit;
  {
    auto& c = make("tgarch", "AR(1)+TGARCH(1,1) maximum likelihood fit");
    c.input("input", tg_input, "returns CSV");
    c.opt("dist", tg_dist, "student-t, normal or ged");
    tg_fit.add(c);
    c.run = [&] {
      const auto r = load_returns(tg_input, 1440);
      const auto f = volmf::fit(r.values, volmf::parse_dist(tg_dist), tg_fit.config());
      Outputs out(out_dir);
      out.write_json("tgarch.json", volmf::to_json(f));
      return out.names();
    };
  }

  // mfdfa
  std::string mf_input;
  MfdfaOptions mf_opts;
  {
    auto& c = make("mfdfa", "multifractal detrended fluctuation analysis");
    c.input("input", mf_input, "returns CSV");
    mf_opts.add(c);
    c.run = [&] {
      const auto cfg = mf_opts.config();
      const auto a = volmf::mfdfa::analyze(load_returns(mf_input, 1440).values, cfg);
      Outputs out(out_dir);
      out.write_json("mfdfa.json", volmf::mfdfa::to_json(a, cfg));
      out.write("fluctuation.csv", [&](std::ostream& os) { volmf::mfdfa::write_csv(os, a.fluct); });
      out.write("hurst.csv", [&](std::ostream& os) { volmf::mfdfa::write_csv(os, a.hurst); });
      out.write("spectrum.csv", [&](std::ostream& os) { volmf::mfdfa::write_csv(os, a.spectrum); });
      return out.names();
    };
  }

  // rolling
  std::string roll_input, estimator = "tgarch", roll_dist = "student-t", roll_output;
  std::size_t window = 548, step = 0;
  FitOptions roll_fit;
  MfdfaOptions roll_mf;
  {
    auto& c = make("rolling", "apply an estimator over sliding windows");
    c.input("input", roll_input, "returns CSV");
    c.opt("estimator", estimator, "tgarch, mfdfa or stats")
        ->check(CLI::IsMember({"tgarch", "mfdfa", "stats"}));
    c.opt("window", window, "window length in observations");
    c.opt("step", step, "window shift; 0 picks 30 for tgarch and 1 otherwise");
    c.opt("dist", roll_dist, "innovation law for tgarch windows");
    c.opt("threads", threads, "worker cap; 0 uses every core");
    c.opt("output", roll_output, "track file name; default track_<estimator>.csv");
    roll_fit.add(c);
    roll_mf.add(c);
    c.run = [&] {
      const auto series = load_returns(roll_input, 1440);
      volmf::RollingConfig rc{window, step ? step : (estimator == "tgarch" ? 30u : 1u), threads};
      volmf::RollingTrack<volmf::Measures> track;
      if (estimator == "tgarch") {
        const auto dist = volmf::parse_dist(roll_dist);
        const auto fc = roll_fit.config();
        track = volmf::rolling_apply(series, rc, [&](std::span<const double> w) {
          return volmf::tgarch_measures(w, dist, fc);
        });
      } else if (estimator == "mfdfa") {
        const auto mc = roll_mf.config();
        track = volmf::rolling_apply(series, rc, [&](std::span<const double> w) {
          return volmf::mfdfa_measures(w, mc);
        });
      } else {
        track = volmf::rolling_apply(series, rc, [](std::span<const double> w) {
          return volmf::stats_measures(w);
        });
      }
      const auto table = volmf::to_table(track, estimator);
      json failures = json::array();
      for (const auto& r : track.rows)
        if (!r.error.empty()) failures.push_back({{"window_end", r.window_end}, {"error", r.error}});
      Outputs out(out_dir);
      out.write(roll_output.empty() ? "track_" + estimator + ".csv" : roll_output,
                [&](std::ostream& os) { volmf::write_csv(os, table); });
      out.write_json((roll_output.empty() ? "track_" + estimator : fs::path(roll_output).stem().string()) +
                         ".json",
                     {{"windows", table.rows.size()}, {"step", rc.step}, {"failures", failures}});
      return out.names();
    };
  }

  // join
  std::vector<std::string> tracks;
  std::string join_output = "joined.csv";
  {
    auto& c = make("join", "inner join of track files on window_end");
    c.input_keys.push_back("tracks");
    c.opt("tracks", tracks, "track CSV files")->required()->expected(1, -1);
    c.opt("output", join_output, "joined file name");
    c.run = [&] {
      std::vector<volmf::TrackTable> tables;
      for (const auto& p : tracks) {
        auto in = open_in(p);
        tables.push_back(volmf::read_track_csv(in, fs::path(p).stem().string()));
      }
      const auto j = volmf::join_measures(tables);
      Outputs out(out_dir);
      out.write(join_output, [&](std::ostream& os) { volmf::write_csv(os, j); });
      out.write_json(fs::path(join_output).stem().string() + ".json",
                     {{"rows", j.rows.size()}, {"dropped", j.dropped}, {"tracks", tracks}});
      return out.names();
    };
  }

  // simulate
  std::string model = "tgarch", sim_output;
  std::size_t n = 10000, burn_in = 1000;
  std::uint64_t seed = 1;
  int levels = 16;
  double cascade_a = 0.75;
  volmf::TgarchParams sim_p{0.0, 0.0, 0.2, 0.1, 0.8, -0.05, volmf::Dist::student_t, 5.0};
  std::string sim_dist = "student-t";
  std::int64_t interval = 60;
  double step_sd = 0.001;
  {
    auto& c = make("simulate", "generate synthetic series");
    c.opt("model", model, "tgarch, cascade, gaussian or ticks")
        ->check(CLI::IsMember({"tgarch", "cascade", "gaussian", "ticks"}));
    c.opt("n", n, "length (observations or ticks)");
    c.opt("seed", seed, "generator seed");
    c.seed_keys.push_back("seed");
    c.opt("burn-in", burn_in, "discarded tgarch warm-up draws");
    c.opt("mu", sim_p.mu, "tgarch intercept");
    c.opt("c1", sim_p.c1, "tgarch AR(1) coefficient");
    c.opt("omega", sim_p.omega, "tgarch omega");
    c.opt("alpha", sim_p.alpha, "tgarch alpha");
    c.opt("beta", sim_p.beta, "tgarch beta");
    c.opt("gamma", sim_p.gamma, "tgarch gamma");
    c.opt("dist", sim_dist, "tgarch innovation law");
    c.opt("shape", sim_p.shape, "nu for student-t, kappa for ged");
    c.opt("levels", levels, "cascade levels (length 2^levels)");
    c.opt("a", cascade_a, "cascade weight");
    c.opt("interval", interval, "seconds between synthetic ticks");
    c.opt("step-sd", step_sd, "per-tick log-price sd");
    c.opt("output", sim_output, "file name; default simulated.csv or ticks.csv");
    c.run = [&] {
      Outputs out(out_dir);
      const std::string name = !sim_output.empty() ? sim_output : model == "ticks" ? "ticks.csv" : "simulated.csv";
      if (model == "ticks") {
        const auto t = volmf::synth::random_walk_ticks(n, interval, seed, 100.0, step_sd);
        out.write(name, [&](std::ostream& os) { volmf::write_ticks(os, t); });
        return out.names();
      }
      std::vector<double> x;
      if (model == "tgarch") {
        sim_p.dist = volmf::parse_dist(sim_dist);
        x = volmf::simulate(sim_p, n, seed, burn_in);
      } else if (model == "cascade") {
        x = volmf::synth::binomial_cascade({levels, cascade_a});
      } else {
        x = volmf::synth::gaussian_noise(n, seed);
      }
      out.write(name, [&](std::ostream& os) {
        volmf::io::write_row(os, {"t", "value"});
        for (std::size_t i = 0; i < x.size(); ++i) volmf::io::write_row(os, {std::to_string(i), volmf::io::fmt(x[i])});
      });
      return out.names();
    };
  }

  std::vector<std::string> args(argv, argv + argc);
  try {
    args = apply_config(std::move(args));
  } catch (const volmf::Error& e) {
    std::cerr << error_json(e.kind(), e.what()) << "\n";
    return kExitUsage;
  }
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());

  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  for (auto& [name, cmd] : commands) {
    if (!cmd.app->parsed()) continue;
    try {
      const auto outputs = cmd.run();
      json cfg = cmd.resolved();
      json inputs = json::object(), seeds = json::object();
      for (const auto& k : cmd.input_keys) {
        if (cfg[k].is_array()) {
          for (auto& v : cfg[k]) v = resolve_input(v.get<std::string>());
        } else {
          cfg[k] = resolve_input(cfg[k].get<std::string>());
        }
        inputs[k] = cfg[k];
      }
      for (const auto& k : cmd.seed_keys) seeds[k] = cfg[k];
      Outputs out(out_dir);
      out.write_json(name + ".manifest.json", {{"subcommand", name},
                                               {"version", volmf::kVersion},
                                               {"inputs", inputs},
                                               {"seeds", seeds},
                                               {"config", cfg},
                                               {"outputs", outputs}});
    } catch (const volmf::ParseError& e) {
      std::cerr << error_json(e.kind(), e.what(), static_cast<long>(e.line())) << "\n";
      return kExitFailure;
    } catch (const volmf::Error& e) {
      std::cerr << error_json(e.kind(), e.what()) << "\n";
      return kExitFailure;
    } catch (const std::exception& e) {
      std::cerr << error_json("internal", e.what()) << "\n";
      return kExitFailure;
    }
  }
  return 0;
}
