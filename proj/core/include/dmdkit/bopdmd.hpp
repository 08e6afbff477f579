#pragma once

#include "dmdkit/exact_dmd.hpp"
#include "dmdkit/varpro.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace dmdkit {

enum class EigConstraint { Imag, ConjugatePairs, Stable };

using ConstraintSet = std::set<EigConstraint>;

std::string constraint_name(EigConstraint c);
/// Comma-separated list: "imag,conjugate_pairs". Empty text -> empty set.
ConstraintSet parse_constraints(const std::string& text);

/// Columns per trial: a fraction of m in (0, 1] or an absolute count.
using TrialSize = std::variant<double, std::size_t>;

struct BopConfig {
  int num_trials = 100;
  TrialSize trial_size = 0.8;
  ConstraintSet eig_constraints;
  std::uint64_t seed = 0;
  VarproOptions varpro;
  /// Worker threads for the trials; 0 = hardware concurrency. Results do
  /// not depend on this value.
  unsigned threads = 0;
};

struct BagStatistics {
  Eigen::VectorXcd omega_mean;
  /// Population standard deviation of Re(omega) in .real() and of Im(omega)
  /// in .imag().
  Eigen::VectorXcd omega_std;
  Eigen::VectorXcd amplitude_mean;
  Eigen::VectorXd amplitude_std;  // sqrt(mean |b - mean b|^2)
  Eigen::MatrixXcd modes_mean;    // column-renormalized
  int trials_converged = 0;
  int num_trials = 0;
};

struct BopResult {
  DmdResult model;
  BagStatistics stats;
};

/// Applies conjugate_pairs first, then imag or stable. Throws ConfigError
/// when both imag and stable are requested.
Eigen::VectorXcd apply_constraints(const Eigen::VectorXcd& omega, const ConstraintSet& constraints);

/// 64-bit seed for trial `index`, independent of scheduling.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index);

/// `count` distinct indices from [0, m), uniformly without replacement, sorted.
std::vector<std::size_t> sample_columns(std::size_t m, std::size_t count, std::uint64_t seed);

/// Columns per trial for a grid of m samples.
std::size_t trial_column_count(const TrialSize& size, std::size_t m);

/// Minimum-cost assignment: result[i] is the column matched to row i.
/// Requires a square cost matrix.
std::vector<std::size_t> min_cost_assignment(const Eigen::MatrixXd& cost);

/// Bagged optimized DMD. Statistics and the model share the model's
/// amplitude ordering.
BopResult fit_bop(const SnapshotMatrix& x, const TimeGrid& t, const RankSpec& rank,
                  const BopConfig& cfg);

}  // namespace dmdkit
