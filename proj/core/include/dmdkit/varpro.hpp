#pragma once

#include "dmdkit/error.hpp"
#include "dmdkit/exact_dmd.hpp"
#include "dmdkit/snapshots.hpp"
#include "dmdkit/svd.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace dmdkit {

enum class JacobianKind {
  GolubPereyra,  // exact derivative of the projected residual
  Kaufman,       // drops the second projector term
};

struct VarproOptions {
  double tol = 1e-6;             // stop when relative residual improvement < tol
  int max_iter = 30;
  double init_damping = 1.0;
  double damping_increase = 2.0;
  int max_damping_steps = 52;
  bool verbose = false;          // per-iteration trace on stderr
  JacobianKind jacobian = JacobianKind::GolubPereyra;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Residuals at or below this fraction of ||X||_F count as an exact fit.
inline constexpr double kExactFitTolerance = 1e-12;

struct VarproSolution {
  Eigen::VectorXcd omega;                 // r continuous-time eigenvalues
  Eigen::MatrixXcd phi_b;                 // n x r, modes times amplitudes
  std::vector<double> residual_history;   // initial residual, then one per accepted step
  bool converged = false;
  int iterations = 0;                     // accepted steps
  double final_damping = 1.0;             // damping in effect at exit, for warm starts
  WarningLog warnings;
};

/// r x m matrix T(omega) with entries exp(omega_j t_k).
Eigen::MatrixXcd exponential_basis(const Eigen::VectorXcd& omega, std::span<const double> t);

/// Phi_b minimizing ||X - Phi_b T(omega)||_F (minimum-norm when T(omega) has
/// condition number above 1e12, with an IllConditionedBasis warning).
Eigen::MatrixXcd project_linear(const Eigen::MatrixXcd& x, const Eigen::VectorXcd& omega,
                                std::span<const double> t, WarningLog* log = nullptr);

/// X - X T(omega)^+ T(omega).
Eigen::MatrixXcd projected_residual(const Eigen::MatrixXcd& x, const Eigen::VectorXcd& omega,
                                    std::span<const double> t);

/// Real Jacobian of the projected residual with respect to
/// (Re omega_0..Re omega_{r-1}, Im omega_0..Im omega_{r-1}). Rows are
/// [Re vec(R); Im vec(R)] with vec() column-major over the n x m residual.
Eigen::MatrixXd varpro_jacobian(const Eigen::MatrixXcd& x, const Eigen::VectorXcd& omega,
                                std::span<const double> t,
                                JacobianKind kind = JacobianKind::GolubPereyra);

/// Map applied to every iterate, e.g. an eigenvalue constraint.
using OmegaProjection = std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>;

/// Levenberg-Marquardt on the projected residual, directly on `x`. With
/// `project` set, the start and every trial step are mapped through it.
VarproSolution solve_varpro(const Eigen::MatrixXcd& x, const TimeGrid& t,
                            const Eigen::VectorXcd& init, const VarproOptions& opts,
                            const OmegaProjection& project = {});

/// Data projected onto its r leading left singular vectors.
struct ProjectedData {
  Eigen::MatrixXcd basis;   // n x r
  Eigen::MatrixXcd coords;  // r x m
};

ProjectedData project_data(const SnapshotMatrix& x, const RankSpec& rank);

/// Optimized DMD: projects X onto its r leading left singular vectors,
/// solves there and lifts Phi_b back. Throws ConfigError unless |init| = r.
VarproSolution solve_varpro(const SnapshotMatrix& x, const TimeGrid& t, const RankSpec& rank,
                            const Eigen::VectorXcd& init, const VarproOptions& opts);

/// Initial eigenvalues: exact DMD on uniform grids; otherwise (or when
/// exact DMD cannot deliver r eigenvalues) the generator of a finite-
/// difference surrogate. Columns are augmented with time derivatives while
/// the projected data has lower rank than r.
Eigen::VectorXcd init_eigs(const SnapshotMatrix& x, const TimeGrid& t, const RankSpec& rank,
                           WarningLog* log = nullptr);

/// Derivative along rows on a possibly uneven grid (three-point Lagrange
/// stencils, one-sided at the ends). Needs at least three samples.
Eigen::MatrixXd time_derivative(const Eigen::MatrixXd& y, std::span<const double> t);

struct SplitSolution {
  Eigen::MatrixXcd modes;      // unit-norm columns
  Eigen::VectorXcd amplitudes; // column norms of Phi_b
  std::vector<bool> inactive;  // true where the Phi_b column was zero
};

SplitSolution split_solution(const VarproSolution& sol);

/// init_eigs + solve_varpro + split, assembled into a DmdResult.
DmdResult fit_optimized(const SnapshotMatrix& x, const TimeGrid& t, const RankSpec& rank,
                        const VarproOptions& opts,
                        const std::optional<Eigen::VectorXcd>& init = std::nullopt);

}  // namespace dmdkit
