#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>

namespace dmdkit {

/// Relative threshold below which singular values count as zero.
inline constexpr double kNumericalRankTolerance = 1e-10;

/// How many singular triplets to keep.
class RankSpec {
 public:
  enum class Mode { Exact, Energy, Full, Auto };

  static RankSpec exact(int r);
  /// Smallest rank capturing `fraction` of the squared singular values.
  static RankSpec energy(double fraction);
  static RankSpec full() { return RankSpec(Mode::Full, 0, 0.0); }
  /// Keep sigma_j > kNumericalRankTolerance * sigma_1.
  static RankSpec automatic() { return RankSpec(Mode::Auto, 0, 0.0); }

  /// "4" -> exact, "0.99" -> energy, "full", "auto".
  static RankSpec parse(const std::string& text);
  std::string to_string() const;

  Mode mode() const noexcept { return mode_; }
  int rank() const noexcept { return rank_; }
  double fraction() const noexcept { return fraction_; }

 private:
  RankSpec(Mode mode, int rank, double fraction)
      : mode_(mode), rank_(rank), fraction_(fraction) {}

  Mode mode_;
  int rank_;
  double fraction_;
};

template <typename Scalar>
struct TruncatedSvd {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix u;                   // n x r, orthonormal columns
  Eigen::VectorXd s;          // r leading singular values, descending
  Matrix v;                   // m x r, orthonormal columns
  Eigen::VectorXd spectrum;   // every singular value
  int rank = 0;
};

/// Thin SVD truncated per `rank`. Throws ConfigError when an exact rank
/// exceeds min(n, m).
TruncatedSvd<double> svd_truncate(const Eigen::MatrixXd& x, const RankSpec& rank);
TruncatedSvd<std::complex<double>> svd_truncate(const Eigen::MatrixXcd& x,
                                                const RankSpec& rank);

Eigen::VectorXd singular_values(const Eigen::MatrixXd& x);

/// Count of singular values above kNumericalRankTolerance * sigma_1.
int numerical_rank(const Eigen::VectorXd& singular_values);
int numerical_rank(const Eigen::MatrixXd& x);

}  // namespace dmdkit
