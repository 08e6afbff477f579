#pragma once

#include "dmdkit/error.hpp"
#include "dmdkit/snapshots.hpp"
#include "dmdkit/svd.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <vector>

namespace dmdkit {

using complex = std::complex<double>;

/// Eigenvalues with modulus below this are dropped from exact DMD output.
inline constexpr double kZeroEigenvalueTolerance = 1e-12;

/// The r x r projection of the one-step advance operator onto the leading
/// left singular subspace of the data.
struct ReducedOperator {
  Eigen::MatrixXd a_tilde;          // r x r
  Eigen::MatrixXd proj_basis;       // n x r, orthonormal columns
  Eigen::VectorXd singular_values;  // r retained values
  Eigen::MatrixXd right_basis;      // (m-1) x r right singular vectors
  Eigen::VectorXcd eigvals;
  Eigen::MatrixXcd eigvecs_reduced;
};

/// Rank-r spatiotemporal decomposition X ~ modes * diag(amplitudes) * T(omega)
/// with T(omega)_{jk} = exp(omega_j t_k).
struct DmdResult {
  Eigen::MatrixXcd modes;            // n x r, unit-norm columns
  Eigen::VectorXcd eigs_discrete;    // exp(omega * dt)
  Eigen::VectorXcd eigs_continuous;  // omega
  Eigen::VectorXcd amplitudes;
  TimeGrid time;                     // grid the model was fitted on
  /// Step of the fit grid; empty for non-uniform grids, in which case
  /// eigs_discrete uses the mean spacing.
  std::optional<double> dt;
  WarningLog warnings;

  int rank() const noexcept { return static_cast<int>(eigs_continuous.size()); }
};

/// Ã = Uᵀ X₂ V Σ⁻¹ from the truncated SVD of X₁, with its eigendecomposition.
/// A requested rank above the numerical rank is reduced with a
/// RankDeficiency warning. Throws DegenerateDataError for a zero X₁.
ReducedOperator compute_operator(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2,
                                 const RankSpec& rank, WarningLog* log = nullptr);

/// Exact DMD on a uniform grid. Throws NonUniformTimeError otherwise.
DmdResult fit_exact(const SnapshotMatrix& x, const TimeGrid& t, const RankSpec& rank);

/// Principal-branch log(lambda) / dt. Throws SingularEigenvalueError for
/// lambda == 0 and ConfigError for dt <= 0.
complex discrete_to_continuous(complex lambda, double dt);

/// Minimum-norm least-squares b of ||modes b - x1||. Rank-deficient modes
/// add a RankDeficiency warning.
Eigen::VectorXcd compute_amplitudes(const Eigen::MatrixXcd& modes,
                                    const Eigen::VectorXcd& x1,
                                    WarningLog* log = nullptr);

/// modes * diag(amplitudes) * T(omega) evaluated on `t`.
Eigen::MatrixXcd reconstruct(const DmdResult& result, const TimeGrid& t);

/// Same formula as reconstruct(); evaluating outside the fit window is
/// extrapolation.
Eigen::MatrixXcd forecast(const DmdResult& result, const TimeGrid& horizon);

/// Descending |b|; runs of |b| equal within 1e-9 relative are ordered by
/// descending Im(omega), then by index.
std::vector<std::size_t> amplitude_order(const Eigen::VectorXcd& amplitudes,
                                         const Eigen::VectorXcd& omega);

/// Assembles a DmdResult: normalizes mode columns (scale moves into the
/// amplitudes), fills eigs_discrete and applies amplitude_order.
DmdResult assemble_result(Eigen::MatrixXcd modes, Eigen::VectorXcd omega,
                          Eigen::VectorXcd amplitudes, const TimeGrid& t,
                          WarningLog warnings = {});

/// Nominal step used for discrete eigenvalues: the uniform step when
/// present, the mean spacing otherwise.
double nominal_step(const TimeGrid& t);

}  // namespace dmdkit
