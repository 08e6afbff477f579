// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include "cli.hpp"

#include "dmdkit/bopdmd.hpp"
#include "dmdkit/csv.hpp"
#include "dmdkit/datagen.hpp"
#include "dmdkit/exact_dmd.hpp"
#include "dmdkit/serialize.hpp"
#include "dmdkit/varpro.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace dmdkit;

namespace {

// Tolerances.
constexpr double kCleanFreqTol = 1e-6;
constexpr double kCleanRuntime = 1.0;
constexpr double kNoisyFreqTol = 2e-2;
constexpr double kNoisyRuntime = 60.0;
constexpr double kUnevenFreqTol = 1e-4;
constexpr double kLinearTol = 1e-8;
constexpr double kForecastTol = 1e-4;
constexpr double kRankTol = 1e-10;

constexpr double kOmega1 = 2.3;
constexpr double kOmega2 = 2.8;

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(3) << std::scientific << v;
  return s.str();
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "dmdkit_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

// Largest deviation of |Im omega| from {w1, w1, w2, w2}, and largest |Re omega|.
std::pair<double, double> frequency_errors(const Eigen::VectorXcd& omega) {
  if (omega.size() != 4) return {INFINITY, INFINITY};
  std::vector<double> f;
  double re = 0.0;
  for (auto w : omega) {
    f.push_back(std::abs(w.imag()));
    re = std::max(re, std::abs(w.real()));
  }
  std::sort(f.begin(), f.end());
  const double err = std::max({std::abs(f[0] - kOmega1), std::abs(f[1] - kOmega1),
                               std::abs(f[2] - kOmega2), std::abs(f[3] - kOmega2)});
  return {err, re};
}

double mean_frequency_error(const Eigen::VectorXcd& omega) {
  std::vector<double> f;
  for (auto w : omega) f.push_back(std::abs(w.imag()));
  std::sort(f.begin(), f.end());
  return (std::abs(f[0] - kOmega1) + std::abs(f[1] - kOmega1) + std::abs(f[2] - kOmega2) +
          std::abs(f[3] - kOmega2)) / 4.0;
}

Eigen::VectorXcd complex_from_json(const io::json& arr) { return io::complex_vector_from_json(arr); }

// Plain DFT magnitude peak (excluding DC), in cycles per unit time.
double dominant_frequency(const Eigen::RowVectorXcd& row, double dt) {
  const Eigen::Index n = row.size();
  double best = -1.0;
  Eigen::Index arg = 1;
  for (Eigen::Index k = 1; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(n);
      acc += row(j) * std::polar(1.0, phase);
    }
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      arg = k;
    }
  }
  const double bin = arg <= n / 2 ? static_cast<double>(arg) : static_cast<double>(arg - n);
  return std::abs(bin) / (static_cast<double>(n) * dt);
}

// 1. Clean frequency recovery through the command line.
Verdict clean_recovery(const fs::path& dir) {
  Verdict v;
  if (cli({"datagen", "two-tone", "--out", (dir / "clean").string()}) != 0) return {false, "datagen failed"};
  const Clock clock;
  const int code = cli({"fit", "--method", "exact", "--rank", "4", "--delays", "10", "--input",
                        (dir / "clean" / "X.csv").string(), "--dt", csv::format_double(4.0 * std::numbers::pi / 128.0),
                        "--out", (dir / "run1").string()});
  const double elapsed = clock.seconds();
  if (code != 0) return {false, "fit exited with " + std::to_string(code)};
  const auto summary = io::read_json(dir / "run1" / "summary.json");
  const auto [err, re] = frequency_errors(complex_from_json(summary["eigs_continuous"]));
  v.pass = err <= kCleanFreqTol && re <= kCleanFreqTol && elapsed < kCleanRuntime;
  v.detail = "max |Im| error " + fmt(err) + ", max |Re| " + fmt(re) + ", fit " + fmt(elapsed) + " s";
  return v;
}

// 2. Numerical rank 2 without delays, 4 with delays.
Verdict rank_doubling() {
  const auto [x, t] = synth_two_tone();
  Verdict v;
  std::ostringstream ranks;
  for (int d : {1, 2, 5, 10, 20}) {
    const SnapshotMatrix h = d > 1 ? hankel_embed(x, {d}) : x;
    const Eigen::VectorXd s = singular_values(h.values());
    int r = 0;
    for (auto sv : s) r += sv > kRankTol * s(0) ? 1 : 0;
    ranks << (d > 1 ? ", " : "") << "d=" << d << ":" << r;
    v.pass = v.pass && r == (d == 1 ? 2 : 4);
  }
  v.detail = ranks.str();
  return v;
}

// 3. Noisy recovery with bagging, plus a median comparison against exact DMD.
Verdict noisy_recovery() {
  const Clock clock;
  const auto [clean, grid] = synth_two_tone();
  const HankelConfig h{10};
  const TimeGrid t = truncate_times(grid, h);
  BopConfig cfg;
  cfg.num_trials = 100;
  cfg.trial_size = 0.8;
  cfg.eig_constraints = {EigConstraint::Imag, EigConstraint::ConjugatePairs};
  cfg.seed = 2024;

  const auto fitted = hankel_embed(add_noise(clean, 0.1, 2024), h);
  const BopResult main = fit_bop(fitted, t, RankSpec::exact(4), cfg);
  const auto [err, re] = frequency_errors(main.stats.omega_mean);
  bool std_ok = true;
  for (auto s : main.stats.omega_std) std_ok = std_ok && std::isfinite(s.imag()) && s.imag() > 0.0 && std::isfinite(s.real());

  std::vector<double> bop_err, exact_err;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto x = hankel_embed(add_noise(clean, 0.1, seed), h);
    BopConfig c = cfg;
    c.seed = seed;
    bop_err.push_back(mean_frequency_error(fit_bop(x, t, RankSpec::exact(4), c).stats.omega_mean));
    exact_err.push_back(mean_frequency_error(fit_exact(x, t, RankSpec::exact(4)).eigs_continuous));
  }
  const auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  const double bop_med = median(bop_err), exact_med = median(exact_err);
  const double elapsed = clock.seconds();

  Verdict v;
  v.pass = err <= kNoisyFreqTol && re == 0.0 && std_ok && bop_med <= exact_med && elapsed < kNoisyRuntime;
  v.detail = "max |Im| error " + fmt(err) + ", max |Re| " + fmt(re) + ", std finite>0 " +
             (std_ok ? "yes" : "no") + ", median error bop " + fmt(bop_med) + " vs exact " +
             fmt(exact_med) + ", " + fmt(elapsed) + " s";
  return v;
}

// 4. Uneven sampling.
Verdict uneven_sampling() {
  const auto [x, grid] = synth_two_tone();
  std::mt19937_64 engine(4);
  std::vector<std::size_t> keep(grid.size());
  for (std::size_t k = 0; k < keep.size(); ++k) keep[k] = k;
  std::shuffle(keep.begin(), keep.end(), engine);
  keep.resize(static_cast<std::size_t>(std::ceil(0.8 * static_cast<double>(grid.size()))));
  std::sort(keep.begin(), keep.end());
  Eigen::MatrixXd sub(x.n_space(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = x.values().col(static_cast<Eigen::Index>(keep[k]));
  const SnapshotMatrix data(sub);
  const TimeGrid t = grid.select(keep);

  const DmdResult opt = fit_optimized(data, t, RankSpec::exact(4), {});
  const auto [err, re] = frequency_errors(opt.eigs_continuous);
  bool rejected = false;
  try {
    fit_exact(data, t, RankSpec::exact(4));
  } catch (const NonUniformTimeError&) {
    rejected = true;
  }
  Verdict v;
  v.pass = err <= kUnevenFreqTol && rejected;
  v.detail = std::to_string(keep.size()) + " of " + std::to_string(grid.size()) + " columns, max |Im| error " +
             fmt(err) + ", exact DMD " + (rejected ? "raised NonUniformTimeError" : "did not reject the grid");
  return v;
}

// 5. Linear systems: exact DMD and warm-started varpro recover the spectrum.
Verdict linear_oracle() {
  std::mt19937_64 engine(5);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> pick_r(1, 4);
  std::uniform_real_distribution<double> radius(0.5, 0.95);
  double worst_exact = 0.0, worst_varpro = 0.0;
  int systems = 0;
  while (systems < 50) {
    const int r = pick_r(engine);
    const int n = std::uniform_int_distribution<int>(r, 8)(engine);
    Eigen::MatrixXd a(r, r), q0(n, r);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(engine);
    for (Eigen::Index i = 0; i < q0.size(); ++i) q0.data()[i] = normal(engine);
    Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(a).eigenvalues();
    a *= radius(engine) / ev.cwiseAbs().maxCoeff();
    ev = Eigen::EigenSolver<Eigen::MatrixXd>(a).eigenvalues();
    double gap = INFINITY;
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = i + 1; j < r; ++j) gap = std::min(gap, std::abs(ev(i) - ev(j)));
    if (gap < 0.05 || ev.cwiseAbs().minCoeff() < 0.2) continue;  // keep the spectrum resolvable
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(q0).householderQ() * Eigen::MatrixXd::Identity(n, r);
    Eigen::VectorXd z(r);
    for (Eigen::Index i = 0; i < r; ++i) z(i) = normal(engine);
    const auto [x, t] = linear_system_data(q * a * q.transpose(), q * z, 2 * r + 6, 1.0);
    const DmdResult fit = fit_exact(x, t, RankSpec::exact(r));
    const auto sol = solve_varpro(x, t, RankSpec::exact(r), fit.eigs_continuous, {});
    Eigen::VectorXcd lam(r);
    for (Eigen::Index j = 0; j < r; ++j) lam(j) = std::exp(sol.omega(j));
    // Pair each true eigenvalue with its nearest fitted one.
    for (Eigen::Index i = 0; i < r; ++i) {
      double e1 = INFINITY, e2 = INFINITY;
      for (Eigen::Index j = 0; j < fit.rank(); ++j) e1 = std::min(e1, std::abs(fit.eigs_discrete(j) - ev(i)));
      for (Eigen::Index j = 0; j < r; ++j) e2 = std::min(e2, std::abs(lam(j) - ev(i)));
      worst_exact = std::max(worst_exact, e1);
      worst_varpro = std::max(worst_varpro, e2);
    }
    if (fit.rank() != r) worst_exact = INFINITY;
    ++systems;
  }
  Verdict v;
  v.pass = worst_exact <= kLinearTol && worst_varpro <= kLinearTol;
  v.detail = "50 systems, worst eigenvalue error exact " + fmt(worst_exact) + ", varpro " + fmt(worst_varpro);
  return v;
}

// 6. Property suites, run as a separate executable.
Verdict property_suites(const std::string& binary) {
  if (binary.empty() || !fs::exists(binary)) return {false, "property test binary not found: " + binary};
  const fs::path log = fs::temp_directory_path() / "dmdkit_acceptance_properties.log";
  const std::string cmd = "\"" + binary + "\" --gtest_brief=1 > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::string line, last;
  int passed = -1;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
    const auto pos = line.find("[  PASSED  ] ");
    if (pos != std::string::npos) passed = std::atoi(line.c_str() + pos + 13);
  }
  Verdict v;
  v.pass = status == 0;
  v.detail = v.pass ? std::to_string(passed) + " property tests passed" : "property suite failed: " + last;
  return v;
}

// 7. Forecast extrapolation against the analytic signal.
Verdict forecast_extrapolation() {
  TwoToneSpec train_spec;
  train_spec.nt = 65;
  train_spec.t_max = 2.0 * std::numbers::pi;
  const auto [x, t] = synth_two_tone(train_spec);
  const HankelConfig h{10};
  const DmdResult fit = fit_exact(hankel_embed(x, h), truncate_times(t, h), RankSpec::exact(4));

  const auto full = linspace(0.0, 4.0 * std::numbers::pi, 129);
  const TimeGrid horizon(std::vector<double>(full.begin() + 65, full.end()));
  const Eigen::MatrixXcd pred = forecast(fit, horizon).topRows(65);
  const auto xs = linspace(train_spec.x_min, train_spec.x_max, train_spec.nx);
  double err2 = 0.0, ref2 = 0.0;
  for (Eigen::Index k = 0; k < pred.cols(); ++k) {
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      const double truth = two_tone_value(train_spec, xs[static_cast<std::size_t>(i)], horizon[static_cast<std::size_t>(k)]);
      err2 += std::norm(pred(i, k) - truth);
      ref2 += truth * truth;
    }
  }
  const double rel = std::sqrt(err2 / ref2);
  Verdict v;
  v.pass = rel <= kForecastTol;
  v.detail = "relative error on (2pi, 4pi] " + fmt(rel);
  return v;
}

// 8. Summary bundle written by criterion 1.
Verdict summary_fidelity(const fs::path& dir) {
  const fs::path run = dir / "run1";
  if (!fs::exists(run / "summary.json")) return {false, "criterion 1 produced no summary.json"};
  const auto j = io::read_json(run / "summary.json");
  const auto disc = complex_from_json(j["eigs_discrete"]);
  const auto cont = complex_from_json(j["eigs_continuous"]);
  const auto sv = j["singular_values"].get<std::vector<double>>();
  const double ratio = sv.size() >= 5 ? sv[4] / sv[0] : INFINITY;
  const double dt = j["dt"].get<double>();
  const Eigen::MatrixXcd dyn = csv::read_complex(run / "dynamics");
  const double bin = 1.0 / (static_cast<double>(dyn.cols()) * dt);
  const double f1 = kOmega1 / (2.0 * std::numbers::pi), f2 = kOmega2 / (2.0 * std::numbers::pi);
  bool rows_ok = dyn.rows() >= 1;
  bool saw1 = false, saw2 = false;
  std::ostringstream freqs;
  for (Eigen::Index r = 0; r < dyn.rows(); ++r) {
    const double f = dominant_frequency(dyn.row(r), dt);
    freqs << (r ? ", " : "") << std::setprecision(4) << f;
    const bool m1 = std::abs(f - f1) <= bin, m2 = std::abs(f - f2) <= bin;
    saw1 = saw1 || m1;
    saw2 = saw2 || m2;
    rows_ok = rows_ok && (m1 || m2);
  }
  Verdict v;
  v.pass = disc.size() == 4 && cont.size() == 4 && ratio <= kRankTol && rows_ok && saw1 && saw2;
  v.detail = std::to_string(disc.size()) + "/" + std::to_string(cont.size()) + " eigenvalues, sigma5/sigma1 " +
             fmt(ratio) + ", dynamics peaks [" + freqs.str() + "] vs " + fmt(f1) + ", " + fmt(f2) +
             " (bin " + fmt(bin) + ")";
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string property_binary = argc > 1 ? argv[1] : "";
  const fs::path dir = work_dir();

  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"clean frequency recovery (exact DMD, d=10, r=4)", [&] { return clean_recovery(dir); }},
      {"rank doubling under delays", [] { return rank_doubling(); }},
      {"noisy recovery with bagged optimized DMD", [] { return noisy_recovery(); }},
      {"uneven sampling", [] { return uneven_sampling(); }},
      {"linear-system oracle equivalence", [] { return linear_oracle(); }},
      {"property suites", [&] { return property_suites(property_binary); }},
      {"forecast extrapolation", [] { return forecast_extrapolation(); }},
      {"summary bundle fidelity", [&] { return summary_fidelity(dir); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << i + 1 << ": " << criteria[i].name << " | "
              << v.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
  fs::remove_all(dir);
  return failures == 0 ? 0 : 1;
}
