#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace dmdkit {

/// Real n x m data matrix, one column per time sample. Entries are finite,
/// n >= 1 and m >= 2; construction throws ValidationError otherwise.
class SnapshotMatrix {
 public:
  explicit SnapshotMatrix(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index n_space() const noexcept { return values_.rows(); }
  Eigen::Index n_time() const noexcept { return values_.cols(); }

 private:
  Eigen::MatrixXd values_;
};

/// Strictly increasing sample times. `uniform_step()` is set when every
/// spacing agrees with the first within kUniformTolerance (relative).
class TimeGrid {
 public:
  static constexpr double kUniformTolerance = 1e-9;

  explicit TimeGrid(std::vector<double> times);

  /// `count` stamps start, start+dt, ...
  static TimeGrid uniform(double start, double dt, std::size_t count);

  std::span<const double> times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  double operator[](std::size_t k) const { return times_[k]; }
  std::optional<double> uniform_step() const noexcept { return step_; }

  /// Subset of stamps at the given (increasing) indices.
  TimeGrid select(std::span<const std::size_t> indices) const;

 private:
  std::vector<double> times_;
  std::optional<double> step_;
};

/// Number of stacked time-shifted copies; 1 means no embedding.
struct HankelConfig {
  int delays = 1;
};

/// Reads a rectangular comma-separated grid (rows = space, columns = time).
/// A single leading line starting with '#' is skipped.
SnapshotMatrix load_csv(const std::filesystem::path& path,
                        bool transpose = false);

/// Reads time stamps from a one-column CSV (one value per line; a row of
/// comma-separated values is also accepted).
TimeGrid load_times_csv(const std::filesystem::path& path);

struct Centered {
  SnapshotMatrix data;
  Eigen::VectorXd mean;
};

/// Subtracts the temporal mean of each row.
Centered center(const SnapshotMatrix& x);

/// Inverse of center().
SnapshotMatrix uncenter(const SnapshotMatrix& centered,
                        const Eigen::VectorXd& mean);

/// Time-delay embedding. Output column k stacks x(t_k), x(t_{k+1}), ...,
/// x(t_{k+d-1}): all space at delay 0, then all space at delay 1, etc.
/// Shape (n*d) x (m-d+1). Throws ConfigError unless 1 <= d <= m-1.
SnapshotMatrix hankel_embed(const SnapshotMatrix& x, HankelConfig cfg);

/// Inverse of hankel_embed: each original entry is the average of every
/// Hankel cell holding a copy of it. Throws ShapeError when the row count
/// is not n_space*d.
SnapshotMatrix hankel_unembed(const SnapshotMatrix& h, HankelConfig cfg,
                              Eigen::Index n_space);

/// Stamp of the earliest snapshot of each embedded column: the first
/// m-d+1 entries.
TimeGrid truncate_times(const TimeGrid& t, HankelConfig cfg);

}  // namespace dmdkit
