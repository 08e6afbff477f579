#include "dmdkit/bopdmd.hpp"

#include "dmdkit/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace dmdkit {

std::string constraint_name(EigConstraint c) {
  switch (c) {
    case EigConstraint::Imag: return "imag";
    case EigConstraint::ConjugatePairs: return "conjugate_pairs";
    case EigConstraint::Stable: return "stable";
  }
  return "unknown";
}

ConstraintSet parse_constraints(const std::string& text) {
  ConstraintSet out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    if (item == "imag") {
      out.insert(EigConstraint::Imag);
    } else if (item == "conjugate_pairs") {
      out.insert(EigConstraint::ConjugatePairs);
    } else if (item == "stable") {
      out.insert(EigConstraint::Stable);
    } else {
      throw ConfigError("unknown eigenvalue constraint '" + item + "'");
    }
  }
  return out;
}

Eigen::VectorXcd apply_constraints(const Eigen::VectorXcd& omega, const ConstraintSet& constraints) {
  const bool imag = constraints.contains(EigConstraint::Imag);
  const bool stable = constraints.contains(EigConstraint::Stable);
  if (imag && stable) {
    throw ConfigError("constraints imag and stable prescribe contradictory real parts");
  }
  Eigen::VectorXcd out = omega;
  const Eigen::Index r = out.size();

  if (constraints.contains(EigConstraint::ConjugatePairs)) {
    std::vector<bool> used(static_cast<std::size_t>(r), false);
    struct Candidate {
      double cost;
      Eigen::Index a;
      Eigen::Index b;
    };
    std::vector<Candidate> pairs;
    for (Eigen::Index a = 0; a < r; ++a) {
      for (Eigen::Index b = a + 1; b < r; ++b) {
        pairs.push_back({std::abs(omega(a) - std::conj(omega(b))), a, b});
      }
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const Candidate& x, const Candidate& y) { return x.cost < y.cost; });
    for (const auto& p : pairs) {
      const auto a = static_cast<std::size_t>(p.a);
      const auto b = static_cast<std::size_t>(p.b);
      if (used[a] || used[b]) continue;
      used[a] = used[b] = true;
      const complex mid = 0.5 * (omega(p.a) + std::conj(omega(p.b)));
      out(p.a) = mid;
      out(p.b) = std::conj(mid);
    }
    for (Eigen::Index j = 0; j < r; ++j) {
      if (!used[static_cast<std::size_t>(j)]) out(j) = complex(omega(j).real(), 0.0);
    }
  }
  for (Eigen::Index j = 0; j < r; ++j) {
    if (imag) out(j) = complex(0.0, out(j).imag());
    if (stable) out(j) = complex(std::min(out(j).real(), 0.0), out(j).imag());
  }
  return out;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

std::vector<std::size_t> sample_columns(std::size_t m, std::size_t count, std::uint64_t seed) {
  if (count > m) throw ConfigError("cannot draw more columns than available");
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(m - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::size_t trial_column_count(const TrialSize& size, std::size_t m) {
  if (const auto* fraction = std::get_if<double>(&size)) {
    if (!(*fraction > 0.0 && *fraction <= 1.0)) {
      throw ConfigError("trial_size fraction must lie in (0, 1]");
    }
    // Guard against 0.8 * m landing a hair above an integer.
    const double raw = *fraction * static_cast<double>(m);
    return static_cast<std::size_t>(std::ceil(raw - 1e-9 * raw));
  }
  return std::get<std::size_t>(size);
}

std::vector<std::size_t> min_cost_assignment(const Eigen::MatrixXd& cost) {
  // Hungarian algorithm with potentials, 1-based internally.
  const auto n = static_cast<std::size_t>(cost.rows());
  if (cost.cols() != cost.rows()) throw ShapeError("assignment needs a square cost matrix");
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

namespace {

struct TrialOutcome {
  bool converged = false;
  Eigen::VectorXcd omega;       // aligned to reference slots
  Eigen::VectorXcd amplitudes;  // aligned, phase-consistent with modes
  Eigen::MatrixXcd modes;       // aligned, unit columns, phase fixed
  std::string diagnostic;
};

// Index of the first component with modulus >= 1% of the largest one.
Eigen::Index phase_anchor(const Eigen::VectorXcd& mode) {
  const double peak = mode.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < mode.size(); ++i) {
    if (std::abs(mode(i)) >= 1e-2 * peak) return i;
  }
  return 0;
}

void run_trials(int count, unsigned threads, const std::function<void(int)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(count));
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) body(i);
    });
  }
}

}  // namespace

BopResult fit_bop(const SnapshotMatrix& x, const TimeGrid& t, const RankSpec& rank,
                  const BopConfig& cfg) {
  if (cfg.num_trials < 1) throw ConfigError("num_trials must be positive");
  cfg.varpro.validate();
  apply_constraints(Eigen::VectorXcd(), cfg.eig_constraints);  // rejects imag+stable
  if (static_cast<Eigen::Index>(t.size()) != x.n_time()) {
    throw ShapeError("time grid length does not match the number of snapshots");
  }

  const ProjectedData proj = project_data(x, rank);
  const Eigen::Index r = proj.basis.cols();
  const auto m = static_cast<std::size_t>(x.n_time());
  const std::size_t count = trial_column_count(cfg.trial_size, m);
  if (count < static_cast<std::size_t>(2 * r) || count > m) {
    throw ConfigError("trial size of " + std::to_string(count) + " columns must lie in [2r, m] = [" +
                      std::to_string(2 * r) + ", " + std::to_string(m) + "]");
  }

  WarningLog log;
  const Eigen::VectorXcd init = init_eigs(x, t, rank, &log);
  OmegaProjection constrain;
  if (!cfg.eig_constraints.empty()) {
    constrain = [&cfg](const Eigen::VectorXcd& w) { return apply_constraints(w, cfg.eig_constraints); };
  }
  const VarproSolution reference = solve_varpro(proj.coords, t, init, cfg.varpro, constrain);
  log.append(reference.warnings);
  const Eigen::VectorXcd& ref_omega = reference.omega;
  const Eigen::MatrixXcd ref_modes = proj.basis * reference.phi_b;
  std::vector<Eigen::Index> anchors(static_cast<std::size_t>(r));
  for (Eigen::Index j = 0; j < r; ++j) anchors[static_cast<std::size_t>(j)] = phase_anchor(ref_modes.col(j));

  VarproOptions trial_opts = cfg.varpro;
  trial_opts.init_damping = reference.final_damping;
  trial_opts.verbose = false;

  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(cfg.num_trials));
  run_trials(cfg.num_trials, cfg.threads, [&](int trial) {
    TrialOutcome& out = outcomes[static_cast<std::size_t>(trial)];
    try {
      const auto cols = sample_columns(m, count, trial_seed(cfg.seed, static_cast<std::uint64_t>(trial)));
      Eigen::MatrixXcd sub(r, static_cast<Eigen::Index>(cols.size()));
      for (std::size_t k = 0; k < cols.size(); ++k) {
        sub.col(static_cast<Eigen::Index>(k)) = proj.coords.col(static_cast<Eigen::Index>(cols[k]));
      }
      const TimeGrid sub_t = t.select(cols);
      const VarproSolution sol = solve_varpro(sub, sub_t, reference.omega, trial_opts, constrain);
      // A stall means no damping level improves on the warm start, which is
      // already a local minimum for this subset.
      if (!sol.converged && !sol.warnings.contains(WarningKind::Stall)) {
        out.diagnostic = "trial " + std::to_string(trial) + ": did not converge after " +
                         std::to_string(sol.iterations) + " iterations, residual " +
                         std::to_string(sol.residual_history.back());
        return;
      }
      const Eigen::VectorXcd& omega = sol.omega;
      const Eigen::MatrixXcd lifted = proj.basis * sol.phi_b;

      Eigen::MatrixXd cost(r, r);
      for (Eigen::Index i = 0; i < r; ++i) {
        for (Eigen::Index j = 0; j < r; ++j) cost(i, j) = std::abs(omega(i) - ref_omega(j));
      }
      const auto slot = min_cost_assignment(cost);

      out.omega.resize(r);
      out.amplitudes.resize(r);
      out.modes.resize(x.n_space(), r);
      for (Eigen::Index i = 0; i < r; ++i) {
        const auto j = static_cast<Eigen::Index>(slot[static_cast<std::size_t>(i)]);
        out.omega(j) = omega(i);
        const Eigen::VectorXcd col = lifted.col(i);
        const double norm = col.norm();
        const complex z = col(anchors[static_cast<std::size_t>(j)]);
        const complex rot = std::abs(z) > 0.0 ? std::conj(z) / std::abs(z) : complex(1.0, 0.0);
        if (norm > 0.0) {
          out.modes.col(j) = col * rot / norm;
          out.amplitudes(j) = norm * std::conj(rot);
        } else {
          out.modes.col(j).setZero();
          out.amplitudes(j) = 0.0;
        }
      }
      out.converged = true;
    } catch (const Error& e) {
      out.diagnostic = "trial " + std::to_string(trial) + ": " + e.name() + ": " + e.what();
    }
  });

  BagStatistics stats;
  stats.num_trials = cfg.num_trials;
  stats.omega_mean = Eigen::VectorXcd::Zero(r);
  stats.amplitude_mean = Eigen::VectorXcd::Zero(r);
  stats.modes_mean = Eigen::MatrixXcd::Zero(x.n_space(), r);
  std::vector<std::string> diagnostics;
  for (const auto& o : outcomes) {
    if (!o.converged) {
      diagnostics.push_back(o.diagnostic);
      continue;
    }
    ++stats.trials_converged;
    stats.omega_mean += o.omega;
    stats.amplitude_mean += o.amplitudes;
    stats.modes_mean += o.modes;
  }
  if (stats.trials_converged == 0) {
    throw BaggingFailedError("all " + std::to_string(cfg.num_trials) + " bagging trials diverged",
                             std::move(diagnostics));
  }
  const double k = stats.trials_converged;
  stats.omega_mean /= k;
  stats.amplitude_mean /= k;
  stats.modes_mean /= k;

  Eigen::VectorXd var_re = Eigen::VectorXd::Zero(r);
  Eigen::VectorXd var_im = Eigen::VectorXd::Zero(r);
  Eigen::VectorXd var_amp = Eigen::VectorXd::Zero(r);
  for (const auto& o : outcomes) {
    if (!o.converged) continue;
    const Eigen::VectorXcd d = o.omega - stats.omega_mean;
    var_re += d.real().cwiseAbs2();
    var_im += d.imag().cwiseAbs2();
    var_amp += (o.amplitudes - stats.amplitude_mean).cwiseAbs2();
  }
  stats.omega_std.resize(r);
  stats.omega_std.real() = (var_re / k).cwiseSqrt();
  stats.omega_std.imag() = (var_im / k).cwiseSqrt();
  stats.amplitude_std = (var_amp / k).cwiseSqrt();

  // Averaging can break exact pairing symmetry by rounding; project again.
  stats.omega_mean = apply_constraints(stats.omega_mean, cfg.eig_constraints);
  for (Eigen::Index j = 0; j < r; ++j) {
    const double norm = stats.modes_mean.col(j).norm();
    if (norm > 0.0) stats.modes_mean.col(j) /= norm;
  }

  const auto order = amplitude_order(stats.amplitude_mean, stats.omega_mean);
  BagStatistics sorted = stats;
  for (Eigen::Index j = 0; j < r; ++j) {
    const auto src = static_cast<Eigen::Index>(order[static_cast<std::size_t>(j)]);
    sorted.omega_mean(j) = stats.omega_mean(src);
    sorted.omega_std(j) = stats.omega_std(src);
    sorted.amplitude_mean(j) = stats.amplitude_mean(src);
    sorted.amplitude_std(j) = stats.amplitude_std(src);
    sorted.modes_mean.col(j) = stats.modes_mean.col(src);
  }
  if (stats.trials_converged < cfg.num_trials) {
    log.add(WarningKind::Stall, std::to_string(cfg.num_trials - stats.trials_converged) +
                                    " bagging trials diverged and were excluded");
  }
  DmdResult model = assemble_result(sorted.modes_mean, sorted.omega_mean, sorted.amplitude_mean,
                                    t, std::move(log));
  return {std::move(model), std::move(sorted)};
}

}  // namespace dmdkit
