#include "cli.hpp"

#include "dmdkit/csv.hpp"
#include "dmdkit/datagen.hpp"
#include "dmdkit/diagnostics.hpp"
#include "dmdkit/error.hpp"
#include "dmdkit/exact_dmd.hpp"
#include "dmdkit/serialize.hpp"
#include "dmdkit/snapshots.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

namespace dmdkit::cli {

std::string method_name(Method m) {
  switch (m) {
    case Method::Exact: return "exact";
    case Method::OptDmd: return "optdmd";
    case Method::BopDmd: return "bopdmd";
  }
  return "exact";
}

Method parse_method(const std::string& text) {
  if (text == "exact") return Method::Exact;
  if (text == "optdmd") return Method::OptDmd;
  if (text == "bopdmd") return Method::BopDmd;
  throw ConfigError("unknown method '" + text + "' (expected exact, optdmd or bopdmd)");
}

void RunConfig::validate() const {
  if (method == Method::BopDmd && !bop) throw ConfigError("method bopdmd requires bagging settings");
  if (delays < 1) throw ConfigError("delays must be at least 1");
  if (!times && !dt) throw ConfigError("either --times or --dt is required");
  if (times && dt) throw ConfigError("--times and --dt are mutually exclusive");
  if (dt && !(*dt > 0.0)) throw ConfigError("--dt must be positive");
  if (input.empty()) throw ConfigError("--input is required");
  if (out.empty()) throw ConfigError("--out is required");
  varpro.validate();
}

namespace {

constexpr const char* kAdvice = R"(Choosing a DMD method
=====================

1. Inspect the rank first.
   Run `dmdkit rank --input X.csv --delays 1,2,5,10`. If the rank jumps when
   delays are added, the raw snapshots hide latent states: fit with
   --delays d. Real-valued oscillations need two modes (a conjugate pair)
   each, so the target rank is usually even.

2. Clean, evenly sampled, well-resolved data:
   --method exact is fast and adequate. It refuses uneven time grids.

3. Uneven sampling, or you need the best least-squares fit:
   --method optdmd fits frequencies and modes jointly and accepts any
   strictly increasing --times file.

4. Noisy data:
   --method bopdmd bags optimized DMD over random column subsets and reports
   eigenvalue means and spreads (bag_statistics.json). If the dynamics are
   known to oscillate without growth or decay, add
   --constraints imag,conjugate_pairs; for decaying systems use
   --constraints stable,conjugate_pairs.

5. Check the result.
   Compare reconstruction_*.csv against the data and look at summary.svg:
   eigenvalues far outside the unit circle, modes that look like noise or
   dynamics that diverge mean the model is not trustworthy. Try another
   rank, more delays or a different method.
)";

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return kExitConfig;
    case ErrorCategory::Data: return kExitData;
    case ErrorCategory::Numerical: return kExitNumerical;
  }
  return kExitNumerical;
}

void report_warnings(const WarningLog& log, std::ostream& err) {
  for (const auto& w : log.entries()) {
    err << "warning: " << warning_name(w.kind) << ": " << w.message << '\n';
  }
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto begin = item.find_first_not_of(' ');
    const auto end = item.find_last_not_of(' ');
    if (begin == std::string::npos) throw ConfigError("empty entry in list '" + text + "'");
    const std::string cell = item.substr(begin, end - begin + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
      throw ConfigError("invalid number '" + cell + "' in '" + text + "'");
    }
    out.push_back(v);
  }
  return out;
}

// "a,b;c,d" -> 2x2 matrix.
Eigen::MatrixXd parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream in(text);
  std::string row;
  while (std::getline(in, row, ';')) rows.push_back(parse_list(row));
  if (rows.empty()) throw ConfigError("empty matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ConfigError("ragged matrix '" + text + "'");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

TrialSize parse_trial_size(const std::string& text) {
  const auto v = parse_list(text);
  if (v.size() != 1) throw ConfigError("invalid trial size '" + text + "'");
  if (text.find_first_of(".eE") == std::string::npos) {
    if (v[0] < 1.0) throw ConfigError("trial size count must be positive");
    return static_cast<std::size_t>(v[0]);
  }
  return v[0];
}

std::string trial_size_text(const TrialSize& s) {
  if (const auto* f = std::get_if<double>(&s)) return csv::format_double(*f);
  return std::to_string(std::get<std::size_t>(s));
}

io::json run_config_json(const RunConfig& cfg) {
  io::json j;
  j["method"] = method_name(cfg.method);
  j["rank"] = cfg.rank.to_string();
  j["delays"] = cfg.delays;
  j["center"] = cfg.center;
  j["transpose"] = cfg.transpose;
  j["input"] = cfg.input.string();
  j["times"] = cfg.times ? io::json(cfg.times->string()) : io::json(nullptr);
  j["dt"] = cfg.dt ? io::json(*cfg.dt) : io::json(nullptr);
  j["out"] = cfg.out.string();
  j["tol"] = cfg.varpro.tol;
  j["max_iter"] = cfg.varpro.max_iter;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["verbose"] = cfg.varpro.verbose;
  j["modes"] = cfg.summary_modes;
  if (cfg.bop) {
    j["num_trials"] = cfg.bop->num_trials;
    j["trial_size"] = trial_size_text(cfg.bop->trial_size);
    std::string constraints;
    for (auto c : cfg.bop->eig_constraints) {
      if (!constraints.empty()) constraints += ',';
      constraints += constraint_name(c);
    }
    j["constraints"] = constraints;
  }
  return j;
}

// Leading spatial block of an embedded reconstruction, with the mean added
// back. Imaginary parts are kept as computed.
Eigen::MatrixXcd to_original_coordinates(const Eigen::MatrixXcd& values, Eigen::Index n_space,
                                         const std::optional<Eigen::VectorXd>& mean) {
  Eigen::MatrixXcd out = values.topRows(n_space);
  if (mean) out.real().colwise() += *mean;
  return out;
}

}  // namespace

int cmd_fit(const RunConfig& cfg, std::ostream& err) {
  cfg.validate();
  ensure_directory(cfg.out);

  const SnapshotMatrix raw = load_csv(cfg.input, cfg.transpose);
  const TimeGrid raw_t = cfg.times ? load_times_csv(*cfg.times)
                                   : TimeGrid::uniform(0.0, *cfg.dt, static_cast<std::size_t>(raw.n_time()));
  if (static_cast<Eigen::Index>(raw_t.size()) != raw.n_time()) {
    throw ShapeError("time grid has " + std::to_string(raw_t.size()) + " stamps but the data has " +
                     std::to_string(raw.n_time()) + " columns");
  }
  if (cfg.method == Method::Exact && !raw_t.uniform_step()) {
    throw NonUniformTimeError("exact DMD requires evenly spaced samples; use optimized DMD");
  }

  // Centering happens before the delay embedding.
  std::optional<Eigen::VectorXd> mean;
  SnapshotMatrix data = raw;
  if (cfg.center) {
    auto c = center(raw);
    data = std::move(c.data);
    mean = std::move(c.mean);
  }
  const HankelConfig hankel{cfg.delays};
  const SnapshotMatrix fitted = cfg.delays > 1 ? hankel_embed(data, hankel) : data;
  const TimeGrid t = cfg.delays > 1 ? truncate_times(raw_t, hankel) : raw_t;

  DmdResult result = [&] {
    switch (cfg.method) {
      case Method::Exact: return fit_exact(fitted, t, cfg.rank);
      case Method::OptDmd: return fit_optimized(fitted, t, cfg.rank, cfg.varpro);
      case Method::BopDmd: {
        BopConfig bop = *cfg.bop;
        bop.varpro = cfg.varpro;
        bop.seed = cfg.seed;
        bop.threads = cfg.threads;
        BopResult fit = fit_bop(fitted, t, cfg.rank, bop);
        io::write_json(io::bag_statistics_json(fit.stats, bop, cfg.rank), cfg.out / "bag_statistics.json");
        return std::move(fit.model);
      }
    }
    throw ConfigError("unknown method");
  }();
  report_warnings(result.warnings, err);

  const SummaryBundle summary = build_summary(result, fitted, hankel, cfg.summary_modes);
  report_warnings(summary.warnings, err);
  io::write_summary(summary, cfg.out);
  emit_svg(summary, cfg.out / "summary.svg");

  const io::ModelFile model{method_name(cfg.method), result, cfg.delays, raw.n_space(), mean};
  io::write_model(model, cfg.out);
  csv::write_complex(cfg.out / "reconstruction",
                     to_original_coordinates(reconstruct(result, t), raw.n_space(), mean));
  io::write_json(run_config_json(cfg), cfg.out / "run_config.json");
  return kExitOk;
}

namespace {

int cmd_forecast(const std::filesystem::path& model_path, const std::filesystem::path& times_path,
                 const std::filesystem::path& out_dir) {
  const io::ModelFile model = io::read_model(model_path);
  const TimeGrid t = load_times_csv(times_path);
  ensure_directory(out_dir);
  csv::write_complex(out_dir / "forecast",
                     to_original_coordinates(forecast(model.result, t), model.n_space, model.mean));
  return kExitOk;
}

struct DatagenOptions {
  std::filesystem::path out = ".";
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

void write_dataset(const SnapshotMatrix& x, const TimeGrid& t, const DatagenOptions& opts) {
  ensure_directory(opts.out);
  const SnapshotMatrix noisy = add_noise(x, opts.noise_sigma, opts.seed);
  csv::write(opts.out / "X.csv", noisy.values());
  const auto times = t.times();
  csv::write_column(opts.out / "t.csv", std::vector<double>(times.begin(), times.end()));
}

// Applies keys of a JSON run file to options not given on the command line.
void merge_config_file(const std::filesystem::path& path,
                       const std::map<std::string, std::pair<CLI::Option*, std::function<void(const io::json&)>>>& setters) {
  const io::json j = io::read_json(path);
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) continue;  // echoes of derived fields, e.g. "out" from run_config.json
    if (it->second.first != nullptr && it->second.first->count() > 0) continue;
    if (value.is_null()) continue;
    try {
      it->second.second(value);
    } catch (const io::json::exception& e) {
      throw ConfigError("invalid value for '" + key + "' in " + path.string() + ": " + e.what());
    }
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic mode decomposition: exact, optimized (variable projection) and bagged optimized DMD"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a DMD model to a snapshot CSV");
  std::string method = "exact", rank = "auto", constraints, trial_size = "0.8", input, times, out_dir, config;
  int delays = 1, num_trials = 100, max_iter = 30, modes = 3;
  double dt = 0.0, tol = 1e-6;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool center_flag = false, verbose = false, transpose = false;
  std::map<std::string, std::pair<CLI::Option*, std::function<void(const io::json&)>>> setters;
  const auto bind = [&](const std::string& key, CLI::Option* opt, auto& target) {
    setters[key] = {opt, [&target](const io::json& v) { target = v.get<std::decay_t<decltype(target)>>(); }};
  };
  bind("method", fit->add_option("--method", method, "exact | optdmd | bopdmd")->capture_default_str(), method);
  bind("rank", fit->add_option("--rank", rank, "integer rank, energy fraction in (0,1), full or auto")->capture_default_str(), rank);
  bind("delays", fit->add_option("--delays", delays, "number of time-delay copies (1 = none)")->capture_default_str(), delays);
  bind("center", fit->add_flag("--center", center_flag, "subtract the temporal mean of each row (before delays)"), center_flag);
  bind("transpose", fit->add_flag("--transpose", transpose, "input CSV has rows = time, columns = space"), transpose);
  bind("input", fit->add_option("--input", input, "snapshot CSV, rows = space, columns = time"), input);
  auto* times_opt = fit->add_option("--times", times, "time stamps CSV (one column or one row)");
  bind("times", times_opt, times);
  auto* dt_opt = fit->add_option("--dt", dt, "uniform time step (stamps start at 0)");
  bind("dt", dt_opt, dt);
  bind("out", fit->add_option("--out", out_dir, "output directory"), out_dir);
  bind("num_trials", fit->add_option("--num-trials", num_trials, "bagging trials (bopdmd)")->capture_default_str(), num_trials);
  bind("trial_size", fit->add_option("--trial-size", trial_size, "fraction of columns in (0,1] or a column count (bopdmd)")->capture_default_str(), trial_size);
  bind("constraints", fit->add_option("--constraints", constraints, "comma list of imag, conjugate_pairs, stable (bopdmd)"), constraints);
  bind("tol", fit->add_option("--tol", tol, "variable projection tolerance")->capture_default_str(), tol);
  bind("max_iter", fit->add_option("--max-iter", max_iter, "variable projection iteration cap")->capture_default_str(), max_iter);
  bind("seed", fit->add_option("--seed", seed, "bagging seed")->capture_default_str(), seed);
  bind("threads", fit->add_option("--threads", threads, "worker threads for bagging (0 = all cores)")->capture_default_str(), threads);
  bind("verbose", fit->add_flag("--verbose", verbose, "trace variable projection iterations on stderr"), verbose);
  bind("modes", fit->add_option("--modes", modes, "modes in the summary")->capture_default_str(), modes);
  fit->add_option("--config", config, "JSON run file; command-line flags take precedence");
  times_opt->excludes(dt_opt);

  // datagen
  auto* datagen = app.add_subcommand("datagen", "Write synthetic snapshot data (X.csv, t.csv)");
  datagen->require_subcommand(1);
  DatagenOptions gen;
  TwoToneSpec spec;
  auto* two_tone = datagen->add_subcommand("two-tone", "sech/tanh two-frequency benchmark");
  auto* linear = datagen->add_subcommand("linear", "x_{k+1} = A x_k");
  for (auto* sub : {two_tone, linear}) {
    sub->add_option("--out", gen.out, "output directory")->capture_default_str();
    sub->add_option("--noise-sigma", gen.noise_sigma, "additive Gaussian noise level")->capture_default_str();
    sub->add_option("--seed", gen.seed, "noise seed")->capture_default_str();
  }
  two_tone->add_option("--nx", spec.nx)->capture_default_str();
  two_tone->add_option("--nt", spec.nt)->capture_default_str();
  two_tone->add_option("--x-min", spec.x_min)->capture_default_str();
  two_tone->add_option("--x-max", spec.x_max)->capture_default_str();
  two_tone->add_option("--t-min", spec.t_min)->capture_default_str();
  two_tone->add_option("--t-max", spec.t_max)->capture_default_str();
  two_tone->add_option("--omega1", spec.omega1)->capture_default_str();
  two_tone->add_option("--omega2", spec.omega2)->capture_default_str();
  std::string a_text, x0_text;
  int lin_m = 0;
  double lin_dt = 1.0;
  linear->add_option("--A", a_text, "operator rows separated by ';', entries by ','")->required();
  linear->add_option("--x0", x0_text, "initial state, comma separated")->required();
  linear->add_option("--m", lin_m, "number of snapshots")->required();
  linear->add_option("--dt", lin_dt, "time step")->capture_default_str();

  // forecast
  auto* fc = app.add_subcommand("forecast", "Evaluate a fitted model at new times");
  std::string model_path, fc_times, fc_out = ".";
  fc->add_option("--model", model_path, "model.json written by fit")->required();
  fc->add_option("--times", fc_times, "time stamps CSV (one column or one row)")->required();
  fc->add_option("--out", fc_out, "output directory for forecast_{re,im}.csv")->capture_default_str();

  // rank
  auto* rank_cmd = app.add_subcommand("rank", "Numerical rank of the data for several delay counts");
  std::string rank_input, rank_delays = "1,2,5,10";
  bool rank_transpose = false;
  rank_cmd->add_option("--input", rank_input, "snapshot CSV")->required();
  rank_cmd->add_option("--delays", rank_delays, "comma list of delay counts")->capture_default_str();
  rank_cmd->add_flag("--transpose", rank_transpose);

  auto* advise = app.add_subcommand("advise", "Print guidance for choosing a method");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (fit->parsed()) {
      if (!config.empty()) merge_config_file(config, setters);
      RunConfig cfg;
      cfg.method = parse_method(method);
      cfg.rank = RankSpec::parse(rank);
      cfg.delays = delays;
      cfg.center = center_flag;
      cfg.transpose = transpose;
      cfg.input = input;
      if (!times.empty()) cfg.times = times;
      if (dt_opt->count() > 0 || dt != 0.0) cfg.dt = dt;
      cfg.out = out_dir;
      cfg.varpro.tol = tol;
      cfg.varpro.max_iter = max_iter;
      cfg.varpro.verbose = verbose;
      cfg.seed = seed;
      cfg.threads = threads;
      cfg.summary_modes = modes;
      if (cfg.method == Method::BopDmd) {
        BopConfig bop;
        bop.num_trials = num_trials;
        bop.trial_size = parse_trial_size(trial_size);
        bop.eig_constraints = parse_constraints(constraints);
        cfg.bop = bop;
      } else if (!constraints.empty()) {
        throw ConfigError("--constraints only applies to --method bopdmd");
      }
      return cmd_fit(cfg, err);
    }
    if (two_tone->parsed()) {
      const auto [x, t] = synth_two_tone(spec);
      write_dataset(x, t, gen);
      return kExitOk;
    }
    if (linear->parsed()) {
      const Eigen::MatrixXd a = parse_matrix(a_text);
      const auto x0v = parse_list(x0_text);
      const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(x0v.data(), static_cast<Eigen::Index>(x0v.size()));
      const auto [x, t] = linear_system_data(a, x0, lin_m, lin_dt);
      write_dataset(x, t, gen);
      return kExitOk;
    }
    if (fc->parsed()) return cmd_forecast(model_path, fc_times, fc_out);
    if (rank_cmd->parsed()) {
      const SnapshotMatrix x = load_csv(rank_input, rank_transpose);
      out << "delays\tcolumns\tnumerical_rank\n";
      for (double d : parse_list(rank_delays)) {
        const HankelConfig h{static_cast<int>(d)};
        const SnapshotMatrix e = h.delays > 1 ? hankel_embed(x, h) : x;
        out << h.delays << '\t' << e.n_time() << '\t' << numerical_rank(e.values()) << '\n';
      }
      return kExitOk;
    }
    if (advise->parsed()) {
      out << kAdvice;
      return kExitOk;
    }
  } catch (const Error& e) {
    std::string message = e.what();
    std::replace(message.begin(), message.end(), '\n', ' ');
    err << "error: " << e.name() << ": " << message << '\n';
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "error: InternalError: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}

}  // namespace dmdkit::cli
