#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "depiabs/bench.hpp"
#include "depiabs/calibration.hpp"
#include "depiabs/errors.hpp"
#include "depiabs/io.hpp"
#include "depiabs/oracle.hpp"
#include "depiabs/sensitivity.hpp"

namespace depiabs::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Section keys understood by the commands; anything else is a typo.
const std::vector<std::string> kSectionKeys = {
    "data.date_column",       "data.value_column",  "data.region_column", "data.region",
    "data.smooth",            "calibration.epochs", "calibration.lr_initial",
    "calibration.lr_final",   "calibration.loss",   "calibration.observable",
    "calibration.train_days", "calibration.restarts", "calibration.learnable",
    "forecast.horizon",       "sobol.space",        "sobol.samples",      "sobol.replicates",
    "sobol.observable",       "sobol.resamples",    "oat.parameter",      "oat.values",
    "oat.observable",         "oat.replicates",     "bench.populations",  "bench.horizon",
    "bench.repeats",          "bench.oracle_population"};

struct Options {
  std::string command;
  std::string config_path;
  std::string data_path;
  std::string out = "out";
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;
  std::vector<std::string> truth;  // synthetic-data overrides
  std::size_t horizon = 0;
  std::size_t epochs = 0;
  std::size_t train_days = 0;
  std::vector<std::size_t> population_grid;
  std::string space_path;
  std::size_t samples = 0;
  std::size_t replicates = 0;
  std::string observable;
  std::string parameter;
  std::vector<double> values;
  bool synthetic = false;
  bool oracle = false;
};

struct Run {
  Options opt;
  ConfigFile config;
  ModelParams params;
  fs::path dir;
  std::ostringstream log;
  json summary;

  void write(const std::string& name, const std::string& content) const { write_file((dir / name).string(), content); }
  void note(const std::string& line) {
    log << line << '\n';
    std::cerr << line << '\n';
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double to_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ConfigError("'" + s + "' is not a number");
  return v;
}

// Flag when given, else config, else the built-in default.
std::size_t pick(std::size_t flag, const ConfigFile& cfg, const std::string& key, std::size_t fallback) {
  return flag ? flag : cfg.get_count(key, fallback);
}

std::string pick(const std::string& flag, const ConfigFile& cfg, const std::string& key, const std::string& fallback) {
  return flag.empty() ? cfg.get(key, fallback) : flag;
}

void prepare(Run& run) {
  auto& opt = run.opt;
  if (!opt.config_path.empty()) run.config = load_config(opt.config_path);
  for (const auto& [key, value] : run.config.values) {
    if (key.find('.') == std::string::npos) continue;
    if (std::find(kSectionKeys.begin(), kSectionKeys.end(), key) == kSectionKeys.end())
      throw ConfigError("unknown config key '" + key + "' (config line " + std::to_string(run.config.lines.at(key)) + ")");
  }
  apply_model_config(run.config, run.params);
  bool explicit_s0 = run.config.has("S0");
  for (const auto& o : opt.overrides) {
    auto [key, value] = split_override(o);
    run.params.set(key, value);
    explicit_s0 = explicit_s0 || key == "S0";
  }
  // Susceptibles fill whatever the initial infected and dead leave over.
  const auto seeded = run.params.a0 + run.params.i0 + run.params.d0;
  if (!explicit_s0 && run.params.population >= seeded) run.params.s0 = run.params.population - seeded;
  if (opt.horizon && opt.command == "simulate") run.params.horizon = opt.horizon;
  run.params.validate();
  if (!opt.data_path.empty() && !fs::exists(opt.data_path)) throw ConfigError("data file '" + opt.data_path + "' not found");

  run.dir = fs::path(opt.out) / (opt.command + "-seed" + std::to_string(opt.seed));
  fs::create_directories(run.dir);
  run.summary["command"] = opt.command;
  run.summary["seed"] = opt.seed;
  run.summary["population"] = run.params.population;
}

// Config snapshot that reloads to the same model parameters.
std::string snapshot(const Run& run) {
  std::ostringstream os;
  os << params_text(run.params);
  std::string section;
  for (const auto& [key, value] : run.config.values) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) continue;
    const std::string s = key.substr(0, dot);
    if (s != section) os << "\n[" << (section = s) << "]\n";
    os << key.substr(dot + 1) << " = " << value << '\n';
  }
  return os.str();
}

void finish(Run& run) {
  run.write("config.txt", snapshot(run));
  run.write("summary.json", run.summary.dump(2) + "\n");
  run.write("log.txt", run.log.str());
}

CalibrationConfig calibration_config(const Run& run) {
  const auto& cfg = run.config;
  CalibrationConfig c;
  c.epochs = pick(run.opt.epochs, cfg, "calibration.epochs", c.epochs);
  c.lr_initial = cfg.get_real("calibration.lr_initial", c.lr_initial);
  c.lr_final = cfg.get_real("calibration.lr_final", c.lr_final);
  const std::string loss = cfg.get("calibration.loss", "mse");
  if (loss == "mse") c.loss = Loss::mse;
  else if (loss == "mae") c.loss = Loss::mae;
  else throw ConfigError("calibration.loss must be mse or mae, got '" + loss + "'");
  c.observable = parse_observable(pick(run.opt.observable, cfg, "calibration.observable", "new_deaths"));
  c.train_days = pick(run.opt.train_days, cfg, "calibration.train_days", 0);
  c.restarts = cfg.get_count("calibration.restarts", c.restarts);
  c.seed = run.opt.seed;
  for (const auto& name : split_list(cfg.get("calibration.learnable", ""))) {
    auto p = find_param(name);
    if (!p) throw ConfigError("calibration.learnable: unknown parameter '" + name + "'");
    c.learnable.push_back(*p);
  }
  c.validate();
  return c;
}

// Target series: a CSV file, or a run of the model at the truth parameters.
std::vector<double> load_target(Run& run, Observable observable, std::size_t days) {
  if (run.opt.synthetic) {
    ModelParams truth = run.params;
    for (const auto& o : run.opt.truth) {
      auto [key, value] = split_override(o);
      truth.set(key, value);
    }
    truth.validate();
    const std::uint64_t data_seed = run.opt.seed + 1000;
    auto series = depiabs::run(truth, data_seed, days).series(observable);
    run.summary["data"] = json{{"source", "synthetic"}, {"seed", data_seed}, {"truth", params_text(truth)}};
    return series;
  }
  if (run.opt.data_path.empty()) throw UsageError("--data is required (or --synthetic)");
  CsvSpec spec;
  spec.date_column = run.config.get("data.date_column", spec.date_column);
  spec.value_column = run.config.get("data.value_column", spec.value_column);
  spec.region_column = run.config.get("data.region_column", "");
  spec.region = run.config.get("data.region", "");
  spec.smooth = run.config.get("data.smooth", "false") == "true";
  auto series = ingest_csv(run.opt.data_path, spec);
  run.summary["data"] = json{{"source", run.opt.data_path}, {"days", series.values.size()}, {"filled", series.filled},
                             {"first_date", series.dates.front()}, {"last_date", series.dates.back()}};
  if (series.filled) run.note("forward-filled " + std::to_string(series.filled) + " missing days");
  return series.values;
}

std::string loss_trace_csv(const CalibrationResult& r, const CalibrationConfig& c) {
  std::ostringstream os;
  os << "epoch,learning_rate,loss\n";
  for (std::size_t e = 0; e < r.loss_trace.size(); ++e)
    os << e << ',' << format_number(c.learning_rate(e % c.epochs)) << ',' << format_number(r.loss_trace[e]) << '\n';
  return os.str();
}

std::string metrics_csv(const std::vector<std::pair<std::string, Metrics>>& rows) {
  std::ostringstream os;
  os << "model,nd,rmse,mae,rmse_standard\n";
  for (const auto& [name, m] : rows)
    os << name << ',' << format_number(m.nd) << ',' << format_number(m.rmse) << ',' << format_number(m.mae) << ','
       << format_number(m.rmse_standard) << '\n';
  return os.str();
}

json metrics_json(const Metrics& m) {
  return {{"nd", m.nd}, {"rmse", m.rmse}, {"mae", m.mae}, {"rmse_standard", m.rmse_standard}};
}

void cmd_simulate(Run& run) {
  const auto out = depiabs::run(run.params, run.opt.seed);
  run.write("series.csv", series_csv(out));
  const auto last = out.days - 1;
  json final;
  for (std::size_t k = 0; k < kObservableCount; ++k)
    final[std::string(observable_name(static_cast<Observable>(k)))] = out.columns[k][last];
  run.summary["days"] = out.days;
  run.summary["final"] = final;
  run.note("simulated " + std::to_string(out.days) + " days for " + std::to_string(run.params.population) + " agents");
}

void cmd_calibrate(Run& run) {
  const auto c = calibration_config(run);
  const auto target = load_target(run, c.observable, run.opt.horizon ? run.opt.horizon : run.params.horizon);
  const auto result = calibrate(run.params, target, c);
  run.write("fitted.txt", params_text(result.fitted));
  run.write("loss_trace.csv", loss_trace_csv(result, c));
  const std::size_t days = c.train_days ? c.train_days : target.size();
  const std::span<const double> train(target.data(), days);
  const auto fit = forecast(result.fitted, train, 0, c);
  std::ostringstream os;
  os << "day,target,fitted\n";
  for (std::size_t t = 0; t < days; ++t) os << t + 1 << ',' << format_number(target[t]) << ',' << format_number(fit.scaled[t]) << '\n';
  run.write("fit.csv", os.str());
  run.summary["best_loss"] = result.best_loss;
  run.summary["best_epoch"] = result.best_epoch;
  run.summary["observable"] = std::string(observable_name(c.observable));
  bool any = false;
  for (double y : train) any = any || y != 0;
  if (any) {
    const auto m = metrics(train, fit.scaled);
    run.write("metrics.csv", metrics_csv({{"fit", m}}));
    run.summary["metrics"] = metrics_json(m);
  }
  run.note("best loss " + format_number(result.best_loss) + " at epoch " + std::to_string(result.best_epoch));
}

void cmd_forecast(Run& run) {
  auto c = calibration_config(run);
  const std::size_t horizon = pick(run.opt.horizon, run.config, "forecast.horizon", 14);
  std::size_t train = c.train_days;
  std::vector<double> data;
  if (run.opt.synthetic) {
    if (!train) train = run.params.horizon;
    data = load_target(run, c.observable, train + horizon);
  } else {
    data = load_target(run, c.observable, 0);
    if (!train) {
      if (data.size() <= horizon) throw UsageError("data has no room for a " + std::to_string(horizon) + "-day hold-out");
      train = data.size() - horizon;
    }
  }
  const auto eval = calibrate_and_forecast(run.params, data, train, horizon, c);
  run.write("fitted.txt", params_text(eval.calibration.fitted));
  run.write("loss_trace.csv", loss_trace_csv(eval.calibration, c));
  std::ostringstream os;
  os << "day,observed,model,split\n";
  for (std::size_t t = 0; t < train + horizon; ++t)
    os << t + 1 << ',' << format_number(data[t]) << ',' << format_number(eval.forecast.scaled[t]) << ','
       << (t < train ? "train" : "test") << '\n';
  run.write("forecast.csv", os.str());
  run.write("metrics.csv", metrics_csv({{"model", eval.model}, {"baseline", eval.baseline}}));
  run.summary["train_days"] = train;
  run.summary["horizon"] = horizon;
  run.summary["best_loss"] = eval.calibration.best_loss;
  run.summary["metrics"] = json{{"model", metrics_json(eval.model)}, {"baseline", metrics_json(eval.baseline)}};
  run.note("held-out ND " + format_number(eval.model.nd) + " (baseline " + format_number(eval.baseline.nd) + ")");
}

void cmd_sobol(Run& run) {
  const std::string space_path = pick(run.opt.space_path, run.config, "sobol.space", "config/sobol_space.txt");
  const auto space = ParamSpace::parse(read_file(space_path));
  const std::size_t n = pick(run.opt.samples, run.config, "sobol.samples", 256);
  const std::size_t replicates = pick(run.opt.replicates, run.config, "sobol.replicates", 8);
  const auto observable = parse_observable(pick(run.opt.observable, run.config, "sobol.observable", "cumulative_infections"));
  const std::size_t resamples = run.config.get_count("sobol.resamples", 1000);
  const auto design = saltelli_sample(space, n);
  const auto y = evaluate_model(design, space, run.params, observable, replicates, run.opt.seed);
  const auto r = sobol_indices(design, y, resamples, 0.95, run.opt.seed);

  std::ostringstream rows;
  rows << "row";
  for (const auto& dim : space.dims) rows << ',' << dim.name;
  rows << ',' << observable_name(observable) << '\n';
  for (std::size_t i = 0; i < design.rows.size(); ++i) {
    rows << i;
    for (double v : design.rows[i]) rows << ',' << format_number(v);
    rows << ',' << format_number(y[i]) << '\n';
  }
  run.write("design.csv", rows.str());

  std::ostringstream os;
  os << "parameter,group,total,total_lo,total_hi,first,first_lo,first_hi,negative\n";
  json indices = json::array();
  for (std::size_t i = 0; i < space.d(); ++i) {
    const auto& dim = space.dims[i];
    os << dim.name << ',' << dim.group << ',' << format_number(r.total[i]) << ',' << format_number(r.total_lo[i]) << ','
       << format_number(r.total_hi[i]) << ',' << format_number(r.first[i]) << ',' << format_number(r.first_lo[i]) << ','
       << format_number(r.first_hi[i]) << ',' << (r.negative[i] ? "true" : "false") << '\n';
    indices.push_back({{"parameter", dim.name}, {"group", dim.group}, {"total", r.total[i]}, {"first", r.first[i]}});
  }
  run.write("sobol.csv", os.str());
  run.write("space.txt", read_file(space_path));
  run.summary["samples"] = n;
  run.summary["rows"] = design.rows.size();
  run.summary["replicates"] = replicates;
  run.summary["observable"] = std::string(observable_name(observable));
  run.summary["undefined"] = r.undefined;
  run.summary["indices"] = indices;
  if (r.undefined) run.note("output variance is zero; indices are undefined");
  run.note("evaluated " + std::to_string(design.rows.size()) + " design rows");
}

void cmd_oat(Run& run) {
  const std::string parameter = pick(run.opt.parameter, run.config, "oat.parameter", "beta");
  std::vector<double> values = run.opt.values;
  if (values.empty())
    for (const auto& v : split_list(run.config.get("oat.values", "0.05,0.15,0.3"))) values.push_back(to_real(v));
  const std::size_t replicates = pick(run.opt.replicates, run.config, "oat.replicates", 8);
  const auto observable = parse_observable(pick(run.opt.observable, run.config, "oat.observable", "cumulative_infections"));
  const auto r = oat_sweep(run.params, parameter, values, observable, replicates, run.opt.seed);

  std::ostringstream os;
  os << "day";
  for (double v : r.values) os << ',' << parameter << '=' << format_number(v);
  os << '\n';
  const std::size_t days = r.mean_series.front().size();
  for (std::size_t t = 0; t < days; ++t) {
    os << t + 1;
    for (const auto& s : r.mean_series) os << ',' << format_number(s[t]);
    os << '\n';
  }
  run.write("oat.csv", os.str());
  json finals = json::array();
  for (std::size_t i = 0; i < r.values.size(); ++i) finals.push_back({{"value", r.values[i]}, {"final_mean", r.final_mean[i]}});
  run.summary["parameter"] = parameter;
  run.summary["observable"] = std::string(observable_name(observable));
  run.summary["replicates"] = replicates;
  run.summary["sweep"] = finals;
}

void cmd_bench(Run& run) {
  std::vector<std::size_t> grid = run.opt.population_grid;
  if (grid.empty())
    for (const auto& v : split_list(run.config.get("bench.populations", "250,500,1000,2000,4000")))
      grid.push_back(static_cast<std::size_t>(to_real(v)));
  const std::size_t horizon = pick(run.opt.horizon, run.config, "bench.horizon", 30);
  const std::size_t repeats = run.config.get_count("bench.repeats", 3);
  const auto points = bench_engine(run.params, grid, horizon, repeats, run.opt.seed);
  std::vector<double> x, y;
  std::ostringstream os;
  os << "population,seconds\n";
  for (const auto& p : points) {
    x.push_back(static_cast<double>(p.population));
    y.push_back(p.seconds);
    os << p.population << ',' << format_number(p.seconds) << '\n';
    run.note("P=" + std::to_string(p.population) + " " + format_number(p.seconds) + " s");
  }
  run.write("bench.csv", os.str());
  json points_json = json::array();
  for (const auto& p : points) points_json.push_back({{"population", p.population}, {"seconds", p.seconds}});
  run.summary["horizon"] = horizon;
  run.summary["points"] = points_json;
  if (points.size() >= 2) {
    const auto fit = fit_line(x, y);
    run.summary["fit"] = json{{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}};
    run.note("slope " + format_number(fit.slope) + " s/agent, R^2 " + format_number(fit.r2));
  }
  if (run.opt.oracle) {
    const std::size_t P = run.config.get_count("bench.oracle_population", 1000);
    const auto params = with_population(run.params, P);
    const double engine = time_engine(params, horizon, repeats, run.opt.seed);
    const double oracle = time_oracle(params, horizon, repeats, run.opt.seed);
    run.summary["oracle"] = json{{"population", P}, {"engine_seconds", engine}, {"oracle_seconds", oracle},
                                 {"speedup", oracle / engine}};
    run.note("oracle/engine speedup at P=" + std::to_string(P) + ": " + format_number(oracle / engine));
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return main(args);
}

int main(const std::vector<std::string>& args) {
  Options opt;
  CLI::App app("Differentiable agent-based epidemic simulator", "depiabs");
  app.require_subcommand(1);
  app.add_option("--config", opt.config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--data", opt.data_path, "CSV target series (header row required)");
  app.add_option("--out", opt.out, "output root; runs go in <out>/<command>-seed<seed>")->capture_default_str();
  app.add_option("--seed", opt.seed, "random seed")->capture_default_str();
  app.add_option("--set", opt.overrides, "override a model key, key=value (repeatable)");

  auto* simulate = app.add_subcommand("simulate", "run the model forward and write daily aggregates");
  simulate->add_option("--horizon", opt.horizon, "days to simulate");

  auto* calibrate_cmd = app.add_subcommand("calibrate", "fit learnable parameters to a target series");
  auto* forecast_cmd = app.add_subcommand("forecast", "calibrate on a training window and forecast past it");
  for (auto* sub : {calibrate_cmd, forecast_cmd}) {
    sub->add_option("--epochs", opt.epochs, "gradient steps");
    sub->add_option("--train-days", opt.train_days, "length of the training window");
    sub->add_option("--observable", opt.observable, "model output compared with the data");
    sub->add_flag("--synthetic", opt.synthetic, "use model output as data instead of --data");
    sub->add_option("--truth", opt.truth, "model key=value used to generate synthetic data (repeatable)");
  }
  calibrate_cmd->add_option("--horizon", opt.horizon, "days of synthetic data");
  forecast_cmd->add_option("--horizon", opt.horizon, "forecast days after the training window");

  auto* sobol = app.add_subcommand("sobol", "variance-based global sensitivity indices");
  sobol->add_option("--space", opt.space_path, "parameter ranges, one 'name lower upper [group]' per line");
  sobol->add_option("--samples", opt.samples, "base sample size N");
  sobol->add_option("--replicates", opt.replicates, "seeds averaged per design row");
  sobol->add_option("--observable", opt.observable, "final-day output analysed");

  auto* oat = app.add_subcommand("oat", "one-at-a-time parameter sweep");
  oat->add_option("--param", opt.parameter, "parameter to vary");
  oat->add_option("--values", opt.values, "values to try")->delimiter(',');
  oat->add_option("--replicates", opt.replicates, "seeds averaged per value");
  oat->add_option("--observable", opt.observable, "output traced over time");

  auto* bench = app.add_subcommand("bench", "runtime against population size");
  bench->add_option("--population-grid", opt.population_grid, "populations to time")->delimiter(',');
  bench->add_option("--horizon", opt.horizon, "days per run");
  bench->add_flag("--oracle", opt.oracle, "also time the discrete reference implementation");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  opt.command = app.get_subcommands().front()->get_name();

  Run run;
  run.opt = opt;
  try {
    prepare(run);
    if (opt.command == "simulate") cmd_simulate(run);
    else if (opt.command == "calibrate") cmd_calibrate(run);
    else if (opt.command == "forecast") cmd_forecast(run);
    else if (opt.command == "sobol") cmd_sobol(run);
    else if (opt.command == "oat") cmd_oat(run);
    else cmd_bench(run);
    finish(run);
    std::cout << run.dir.string() << '\n';
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace depiabs::cli
