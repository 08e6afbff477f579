#include "dmdkit/snapshots.hpp"

#include "dmdkit/csv.hpp"
#include "dmdkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dmdkit {

SnapshotMatrix::SnapshotMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() < 1) throw ValidationError("snapshot matrix needs at least one row");
  if (values_.cols() < 2) throw ValidationError("snapshot matrix needs at least two time samples");
  if (!values_.allFinite()) throw ValidationError("snapshot matrix contains NaN or Inf");
}

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.empty()) throw ValidationError("time grid is empty");
  for (double t : times_) {
    if (!std::isfinite(t)) throw ValidationError("time grid contains NaN or Inf");
  }
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) {
      throw ValidationError("time stamps must be strictly increasing (index " +
                            std::to_string(k) + ")");
    }
  }
  if (times_.size() < 2) return;
  // Mean spacing as the reference so a single jittered first step does not
  // decide the outcome.
  const double dt = (times_.back() - times_.front()) /
                    static_cast<double>(times_.size() - 1);
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (std::abs((times_[k] - times_[k - 1]) - dt) > kUniformTolerance * dt) return;
  }
  step_ = dt;
}

TimeGrid TimeGrid::uniform(double start, double dt, std::size_t count) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  std::vector<double> t(count);
  for (std::size_t k = 0; k < count; ++k) t[k] = start + static_cast<double>(k) * dt;
  return TimeGrid(std::move(t));
}

TimeGrid TimeGrid::select(std::span<const std::size_t> indices) const {
  std::vector<double> t;
  t.reserve(indices.size());
  for (auto k : indices) t.push_back(times_.at(k));
  return TimeGrid(std::move(t));
}

SnapshotMatrix load_csv(const std::filesystem::path& path, bool transpose) {
  Eigen::MatrixXd m = csv::to_matrix(csv::read(path));
  if (transpose) m.transposeInPlace();
  return SnapshotMatrix(std::move(m));
}

TimeGrid load_times_csv(const std::filesystem::path& path) {
  const auto grid = csv::read(path);
  const bool column = std::all_of(grid.rows.begin(), grid.rows.end(),
                                  [](const auto& row) { return row.size() == 1; });
  if (!column && grid.rows.size() != 1) {
    throw FormatError("time file must be a single column or a single row");
  }
  std::vector<double> t;
  for (const auto& row : grid.rows) t.insert(t.end(), row.begin(), row.end());
  return TimeGrid(std::move(t));
}

Centered center(const SnapshotMatrix& x) {
  const Eigen::VectorXd mean = x.values().rowwise().mean();
  Eigen::MatrixXd c = x.values().colwise() - mean;
  return {SnapshotMatrix(std::move(c)), mean};
}

SnapshotMatrix uncenter(const SnapshotMatrix& centered, const Eigen::VectorXd& mean) {
  if (mean.size() != centered.n_space()) {
    throw ShapeError("mean length does not match the number of rows");
  }
  return SnapshotMatrix(centered.values().colwise() + mean);
}

SnapshotMatrix hankel_embed(const SnapshotMatrix& x, HankelConfig cfg) {
  const Eigen::Index n = x.n_space();
  const Eigen::Index m = x.n_time();
  const int d = cfg.delays;
  if (d < 1 || d > m - 1) {
    throw ConfigError("delays must lie in [1, " + std::to_string(m - 1) +
                      "], got " + std::to_string(d));
  }
  const Eigen::Index cols = m - d + 1;
  Eigen::MatrixXd h(n * d, cols);
  for (int j = 0; j < d; ++j) {
    h.middleRows(j * n, n) = x.values().middleCols(j, cols);
  }
  return SnapshotMatrix(std::move(h));
}

SnapshotMatrix hankel_unembed(const SnapshotMatrix& h, HankelConfig cfg,
                              Eigen::Index n_space) {
  const int d = cfg.delays;
  if (d < 1 || n_space < 1 || h.n_space() != n_space * d) {
    throw ShapeError("Hankel matrix has " + std::to_string(h.n_space()) +
                     " rows, expected n_space*d = " +
                     std::to_string(n_space * d));
  }
  const Eigen::Index cols = h.n_time();
  const Eigen::Index m = cols + d - 1;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n_space, m);
  Eigen::RowVectorXd count = Eigen::RowVectorXd::Zero(m);
  for (int j = 0; j < d; ++j) {
    sum.middleCols(j, cols) += h.values().middleRows(j * n_space, n_space);
    count.segment(j, cols).array() += 1.0;
  }
  for (Eigen::Index k = 0; k < m; ++k) sum.col(k) /= count(k);
  return SnapshotMatrix(std::move(sum));
}

TimeGrid truncate_times(const TimeGrid& t, HankelConfig cfg) {
  const auto d = static_cast<std::size_t>(cfg.delays);
  if (cfg.delays < 1 || t.size() < d) {
    throw ConfigError("time grid shorter than the number of delays");
  }
  const auto times = t.times();
  return TimeGrid(std::vector<double>(times.begin(), times.end() - static_cast<std::ptrdiff_t>(d - 1)));
}

}  // namespace dmdkit
