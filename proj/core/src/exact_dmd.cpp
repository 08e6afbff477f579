#include "dmdkit/exact_dmd.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dmdkit {

ReducedOperator compute_operator(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2,
                                 const RankSpec& rank, WarningLog* log) {
  auto svd = svd_truncate(x1, rank);
  if (svd.spectrum.size() == 0 || svd.spectrum(0) == 0.0) {
    throw DegenerateDataError("data matrix is identically zero");
  }
  const int numerical = numerical_rank(svd.spectrum);
  if (svd.rank > numerical) {
    warn(log, WarningKind::RankDeficiency,
         "requested rank " + std::to_string(svd.rank) +
             " exceeds numerical rank " + std::to_string(numerical) +
             "; reduced to " + std::to_string(numerical));
    svd.rank = numerical;
    svd.u.conservativeResize(Eigen::NoChange, numerical);
    svd.v.conservativeResize(Eigen::NoChange, numerical);
    svd.s.conservativeResize(numerical);
  }

  ReducedOperator op;
  op.proj_basis = std::move(svd.u);
  op.singular_values = std::move(svd.s);
  op.right_basis = std::move(svd.v);
  op.a_tilde = op.proj_basis.transpose() * x2 * op.right_basis *
               op.singular_values.cwiseInverse().asDiagonal();

  Eigen::EigenSolver<Eigen::MatrixXd> eig(op.a_tilde);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition of the reduced operator failed");
  }
  op.eigvals = eig.eigenvalues();
  op.eigvecs_reduced = eig.eigenvectors();
  return op;
}

complex discrete_to_continuous(complex lambda, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (lambda == complex(0.0, 0.0)) {
    throw SingularEigenvalueError("log of a zero eigenvalue is undefined");
  }
  return std::log(lambda) / dt;
}

Eigen::VectorXcd compute_amplitudes(const Eigen::MatrixXcd& modes,
                                    const Eigen::VectorXcd& x1, WarningLog* log) {
  if (modes.rows() != x1.size()) {
    throw ShapeError("mode rows do not match the state dimension");
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(modes, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? 1e-12 * s(0) : 0.0;
  Eigen::VectorXcd coeffs = svd.matrixU().adjoint() * x1;
  bool deficient = modes.cols() > modes.rows();
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (s(j) > cutoff) {
      coeffs(j) /= s(j);
    } else {
      coeffs(j) = 0.0;
      deficient = true;
    }
  }
  if (deficient) {
    warn(log, WarningKind::RankDeficiency,
         "mode matrix is rank deficient; minimum-norm amplitudes returned");
  }
  return svd.matrixV() * coeffs;
}

double nominal_step(const TimeGrid& t) {
  if (auto dt = t.uniform_step()) return *dt;
  if (t.size() < 2) return 1.0;
  return (t[t.size() - 1] - t[0]) / static_cast<double>(t.size() - 1);
}

std::vector<std::size_t> amplitude_order(const Eigen::VectorXcd& amplitudes,
                                         const Eigen::VectorXcd& omega) {
  const auto r = static_cast<std::size_t>(amplitudes.size());
  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto mag = [&](std::size_t j) { return std::abs(amplitudes(static_cast<Eigen::Index>(j))); };
  const auto im = [&](std::size_t j) { return omega(static_cast<Eigen::Index>(j)).imag(); };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return mag(a) > mag(b); });
  // Re-sort runs of equal magnitude by frequency.
  std::size_t start = 0;
  while (start < r) {
    std::size_t end = start + 1;
    const double head = mag(order[start]);
    while (end < r && head - mag(order[end]) <= 1e-9 * head) ++end;
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                     order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return im(a) > im(b); });
    start = end;
  }
  return order;
}

DmdResult assemble_result(Eigen::MatrixXcd modes, Eigen::VectorXcd omega,
                          Eigen::VectorXcd amplitudes, const TimeGrid& t,
                          WarningLog warnings) {
  const Eigen::Index r = omega.size();
  for (Eigen::Index j = 0; j < r; ++j) {
    const double norm = modes.col(j).norm();
    if (norm > 0.0) {
      modes.col(j) /= norm;
      amplitudes(j) *= norm;
    } else {
      modes.col(j).setZero();
      modes(0, j) = 1.0;
      amplitudes(j) = 0.0;
    }
  }
  const auto order = amplitude_order(amplitudes, omega);
  const double step = nominal_step(t);

  DmdResult out{Eigen::MatrixXcd(modes.rows(), r), Eigen::VectorXcd(r),
                Eigen::VectorXcd(r), Eigen::VectorXcd(r), t, t.uniform_step(),
                std::move(warnings)};
  for (Eigen::Index j = 0; j < r; ++j) {
    const auto src = static_cast<Eigen::Index>(order[static_cast<std::size_t>(j)]);
    out.modes.col(j) = modes.col(src);
    out.eigs_continuous(j) = omega(src);
    out.eigs_discrete(j) = std::exp(omega(src) * step);
    out.amplitudes(j) = amplitudes(src);
  }
  return out;
}

DmdResult fit_exact(const SnapshotMatrix& x, const TimeGrid& t, const RankSpec& rank) {
  if (static_cast<Eigen::Index>(t.size()) != x.n_time()) {
    throw ShapeError("time grid length does not match the number of snapshots");
  }
  const auto dt = t.uniform_step();
  if (!dt) {
    throw NonUniformTimeError(
        "exact DMD requires evenly spaced samples; use optimized DMD");
  }
  if (x.n_time() < 3) throw ValidationError("exact DMD needs at least 3 snapshots");

  const Eigen::Index m = x.n_time();
  const Eigen::MatrixXd x1 = x.values().leftCols(m - 1);
  const Eigen::MatrixXd x2 = x.values().rightCols(m - 1);

  WarningLog log;
  const ReducedOperator op = compute_operator(x1, x2, rank, &log);

  // Exact-DMD lift: Φ = X₂ V Σ⁻¹ W.
  const Eigen::MatrixXcd lift =
      (x2 * op.right_basis * op.singular_values.cwiseInverse().asDiagonal())
          .cast<complex>() *
      op.eigvecs_reduced;

  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < op.eigvals.size(); ++j) {
    if (std::abs(op.eigvals(j)) < kZeroEigenvalueTolerance) {
      warn(&log, WarningKind::SingularEigenvalue,
           "dropped eigenvalue with |lambda| < 1e-12 (no continuous-time counterpart)");
    } else {
      kept.push_back(j);
    }
  }
  if (kept.empty()) throw DegenerateDataError("every DMD eigenvalue is zero");

  const auto r = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXcd modes(x.n_space(), r);
  Eigen::VectorXcd omega(r);
  for (Eigen::Index j = 0; j < r; ++j) {
    const Eigen::Index src = kept[static_cast<std::size_t>(j)];
    modes.col(j) = lift.col(src);
    const double norm = modes.col(j).norm();
    if (norm > 0.0) modes.col(j) /= norm;
    omega(j) = discrete_to_continuous(op.eigvals(src), *dt);
  }

  Eigen::VectorXcd b = compute_amplitudes(modes, x.values().col(0).cast<complex>(), &log);
  // Amplitudes refer to t = 0 so that reconstruct() works on absolute times.
  const double t0 = t[0];
  if (t0 != 0.0) {
    for (Eigen::Index j = 0; j < r; ++j) b(j) *= std::exp(-omega(j) * t0);
  }

  return assemble_result(std::move(modes), std::move(omega), std::move(b), t,
                         std::move(log));
}

Eigen::MatrixXcd reconstruct(const DmdResult& result, const TimeGrid& t) {
  const Eigen::Index r = result.rank();
  const auto cols = static_cast<Eigen::Index>(t.size());
  Eigen::MatrixXcd dynamics(r, cols);
  for (Eigen::Index j = 0; j < r; ++j) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      dynamics(j, k) = result.amplitudes(j) *
                       std::exp(result.eigs_continuous(j) * t[static_cast<std::size_t>(k)]);
    }
  }
  return result.modes * dynamics;
}

Eigen::MatrixXcd forecast(const DmdResult& result, const TimeGrid& horizon) {
  return reconstruct(result, horizon);
}

}  // namespace dmdkit
