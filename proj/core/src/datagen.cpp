#include "dmdkit/datagen.hpp"

#include "dmdkit/error.hpp"
#include "dmdkit/random.hpp"

#include <cmath>

namespace dmdkit {

void TwoToneSpec::validate() const {
  if (nx < 2 || nt < 2) throw ConfigError("two-tone grids need at least two points");
  if (!(x_max > x_min)) throw ConfigError("x_max must exceed x_min");
  if (!(t_max > t_min)) throw ConfigError("t_max must exceed t_min");
}

std::vector<double> linspace(double start, double stop, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = start;
    return out;
  }
  const double step = (stop - start) / (count - 1);
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = start + i * step;
  out.back() = stop;
  return out;
}

double two_tone_value(const TwoToneSpec& spec, double x, double t) {
  return 1.0 / std::cosh(x + 3.0) * std::cos(spec.omega1 * t) +
         2.0 / std::cosh(x) * std::tanh(x) * std::sin(spec.omega2 * t);
}

std::pair<SnapshotMatrix, TimeGrid> synth_two_tone(const TwoToneSpec& spec) {
  spec.validate();
  const auto x = linspace(spec.x_min, spec.x_max, spec.nx);
  const auto t = linspace(spec.t_min, spec.t_max, spec.nt);
  Eigen::MatrixXd values(spec.nx, spec.nt);
  for (int i = 0; i < spec.nx; ++i) {
    for (int k = 0; k < spec.nt; ++k) {
      values(i, k) = two_tone_value(spec, x[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(k)]);
    }
  }
  return {SnapshotMatrix(std::move(values)), TimeGrid(t)};
}

SnapshotMatrix add_noise(const SnapshotMatrix& x, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (sigma == 0.0) return x;
  Rng rng(seed);
  Eigen::MatrixXd values = x.values();
  for (Eigen::Index k = 0; k < values.cols(); ++k) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) values(i, k) += sigma * rng.normal();
  }
  return SnapshotMatrix(std::move(values));
}

std::pair<SnapshotMatrix, TimeGrid> linear_system_data(const Eigen::MatrixXd& a,
                                                       const Eigen::VectorXd& x0, int m,
                                                       double dt) {
  if (a.rows() != a.cols() || a.rows() != x0.size()) {
    throw ConfigError("operator must be square and match the initial state");
  }
  if (m < 2) throw ConfigError("need at least two snapshots");
  Eigen::MatrixXd values(x0.size(), m);
  values.col(0) = x0;
  for (int k = 1; k < m; ++k) values.col(k) = a * values.col(k - 1);
  return {SnapshotMatrix(std::move(values)), TimeGrid::uniform(0.0, dt, static_cast<std::size_t>(m))};
}

}  // namespace dmdkit
