#pragma once

#include "dmdkit/snapshots.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <numbers>
#include <utility>

namespace dmdkit {

/// f(x, t) = sech(x + 3) cos(omega1 t) + 2 sech(x) tanh(x) sin(omega2 t)
/// sampled on uniform x and t grids.
struct TwoToneSpec {
  int nx = 65;
  int nt = 129;
  double x_min = -5.0;
  double x_max = 5.0;
  double t_min = 0.0;
  double t_max = 4.0 * std::numbers::pi;
  double omega1 = 2.3;
  double omega2 = 2.8;

  void validate() const;
};

/// `count` evenly spaced points from start to stop, both included.
std::vector<double> linspace(double start, double stop, int count);

double two_tone_value(const TwoToneSpec& spec, double x, double t);

std::pair<SnapshotMatrix, TimeGrid> synth_two_tone(const TwoToneSpec& spec = {});

/// Adds i.i.d. N(0, sigma^2) noise drawn from Rng(seed) in column-major
/// order. sigma == 0 returns the input unchanged.
SnapshotMatrix add_noise(const SnapshotMatrix& x, double sigma, std::uint64_t seed);

/// Column k (k = 0..m-1) is A^k x0 at time k*dt.
std::pair<SnapshotMatrix, TimeGrid> linear_system_data(const Eigen::MatrixXd& a,
                                                       const Eigen::VectorXd& x0, int m,
                                                       double dt);

}  // namespace dmdkit
