#include "dmdkit/varpro.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <string>

namespace dmdkit {

void VarproOptions::validate() const {
  if (!(tol > 0.0)) throw ConfigError("varpro tol must be positive");
  if (max_iter < 1) throw ConfigError("varpro max_iter must be at least 1");
  if (!(init_damping > 0.0)) throw ConfigError("varpro init_damping must be positive");
  if (!(damping_increase > 1.0)) throw ConfigError("varpro damping_increase must exceed 1");
  if (max_damping_steps < 1) throw ConfigError("varpro max_damping_steps must be at least 1");
}

namespace {

constexpr double kBasisConditionLimit = 1e12;

// Thin SVD of A = T(omega)^T (m x r), truncated to the numerically nonzero
// part so the pseudo-inverse is minimum-norm.
struct BasisFactor {
  Eigen::MatrixXcd a;  // m x r
  Eigen::MatrixXcd u;  // m x k
  Eigen::VectorXd s;   // k
  Eigen::MatrixXcd v;  // r x k
  bool ill_conditioned = false;
  bool finite = true;

  Eigen::MatrixXcd pinv_apply(const Eigen::MatrixXcd& y) const {
    return v * (s.cwiseInverse().asDiagonal() * (u.adjoint() * y));
  }
};

BasisFactor factor_basis(const Eigen::VectorXcd& omega, std::span<const double> t) {
  BasisFactor f;
  f.a = exponential_basis(omega, t).transpose();
  if (!f.a.allFinite()) {
    f.finite = false;
    return f;
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(f.a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  Eigen::Index k = 0;
  const double cutoff = s.size() > 0 ? s(0) / kBasisConditionLimit : 0.0;
  while (k < s.size() && s(k) > cutoff) ++k;
  f.ill_conditioned = k < f.a.cols();
  f.u = svd.matrixU().leftCols(k);
  f.s = s.head(k);
  f.v = svd.matrixV().leftCols(k);
  return f;
}

// Residual in transposed orientation: Y - A A^+ Y with Y = X^T.
Eigen::MatrixXcd residual_t(const BasisFactor& f, const Eigen::MatrixXcd& y) {
  return y - f.u * (f.u.adjoint() * y);
}

double residual_norm(const Eigen::MatrixXcd& y, const Eigen::VectorXcd& omega,
                     std::span<const double> t) {
  const BasisFactor f = factor_basis(omega, t);
  if (!f.finite) return std::numeric_limits<double>::infinity();
  return residual_t(f, y).norm();
}

Eigen::MatrixXd jacobian_t(const BasisFactor& f, const Eigen::MatrixXcd& y,
                           const Eigen::VectorXcd& omega, std::span<const double> t,
                           JacobianKind kind) {
  const Eigen::Index m = y.rows();
  const Eigen::Index p = y.cols();
  const Eigen::Index r = omega.size();
  const Eigen::MatrixXcd b = f.pinv_apply(y);  // r x p
  const Eigen::MatrixXcd res = residual_t(f, y);
  // Columns of (A^+)^H = U S^-1 V^H.
  const Eigen::MatrixXcd pinv_h = f.u * f.s.cwiseInverse().asDiagonal() * f.v.adjoint();

  Eigen::VectorXcd tv(m);
  for (Eigen::Index k = 0; k < m; ++k) tv(k) = t[static_cast<std::size_t>(k)];

  Eigen::MatrixXd jac(2 * m * p, 2 * r);
  for (Eigen::Index j = 0; j < r; ++j) {
    const Eigen::VectorXcd da = tv.cwiseProduct(f.a.col(j));  // d a_j / d Re(omega_j)
    const Eigen::VectorXcd proj_da = da - f.u * (f.u.adjoint() * da);
    for (int part = 0; part < 2; ++part) {
      const complex c = part == 0 ? complex(1.0, 0.0) : complex(0.0, 1.0);
      Eigen::MatrixXcd d = c * proj_da * b.row(j);
      if (kind == JacobianKind::GolubPereyra) {
        const Eigen::RowVectorXcd w = std::conj(c) * (da.adjoint() * res);
        d += pinv_h.col(j) * w;
      }
      d = -d;
      // Column-major over the n x m (= p x m) residual: element (i, k) of
      // R_X is d(k, i).
      auto col = jac.col(part * r + j);
      for (Eigen::Index k = 0; k < m; ++k) {
        for (Eigen::Index i = 0; i < p; ++i) {
          col(i + p * k) = d(k, i).real();
          col(m * p + i + p * k) = d(k, i).imag();
        }
      }
    }
  }
  return jac;
}

Eigen::VectorXd flatten_t(const Eigen::MatrixXcd& res) {
  const Eigen::Index m = res.rows();
  const Eigen::Index p = res.cols();
  Eigen::VectorXd out(2 * m * p);
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index i = 0; i < p; ++i) {
      out(i + p * k) = res(k, i).real();
      out(m * p + i + p * k) = res(k, i).imag();
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXcd exponential_basis(const Eigen::VectorXcd& omega, std::span<const double> t) {
  Eigen::MatrixXcd basis(omega.size(), static_cast<Eigen::Index>(t.size()));
  for (Eigen::Index j = 0; j < omega.size(); ++j) {
    for (std::size_t k = 0; k < t.size(); ++k) {
      basis(j, static_cast<Eigen::Index>(k)) = std::exp(omega(j) * t[k]);
    }
  }
  return basis;
}

Eigen::MatrixXcd project_linear(const Eigen::MatrixXcd& x, const Eigen::VectorXcd& omega,
                                std::span<const double> t, WarningLog* log) {
  if (x.cols() != static_cast<Eigen::Index>(t.size())) {
    throw ShapeError("data columns do not match the time grid");
  }
  const BasisFactor f = factor_basis(omega, t);
  if (!f.finite) throw NumericalError("exponential basis overflows on this time grid");
  if (f.ill_conditioned) {
    warn(log, WarningKind::IllConditionedBasis,
         "exponential basis T(omega) is numerically rank deficient; "
         "minimum-norm solution returned");
  }
  return f.pinv_apply(x.transpose()).transpose();
}

Eigen::MatrixXcd projected_residual(const Eigen::MatrixXcd& x, const Eigen::VectorXcd& omega,
                                    std::span<const double> t) {
  const BasisFactor f = factor_basis(omega, t);
  if (!f.finite) throw NumericalError("exponential basis overflows on this time grid");
  return residual_t(f, x.transpose()).transpose();
}

Eigen::MatrixXd varpro_jacobian(const Eigen::MatrixXcd& x, const Eigen::VectorXcd& omega,
                                std::span<const double> t, JacobianKind kind) {
  const BasisFactor f = factor_basis(omega, t);
  if (!f.finite) throw NumericalError("exponential basis overflows on this time grid");
  return jacobian_t(f, x.transpose(), omega, t, kind);
}

VarproSolution solve_varpro(const Eigen::MatrixXcd& x, const TimeGrid& t,
                            const Eigen::VectorXcd& init, const VarproOptions& opts,
                            const OmegaProjection& project) {
  opts.validate();
  if (x.cols() != static_cast<Eigen::Index>(t.size())) {
    throw ShapeError("data columns do not match the time grid");
  }
  const Eigen::Index r = init.size();
  if (r < 1) throw ConfigError("at least one initial eigenvalue is required");
  if (static_cast<Eigen::Index>(t.size()) < r) {
    throw ConfigError("need at least as many samples as eigenvalues");
  }

  const auto times = t.times();
  const Eigen::MatrixXcd y = x.transpose();
  const double scale = y.norm();
  const double floor = kExactFitTolerance * scale;

  VarproSolution sol;
  sol.omega = project ? project(init) : init;
  double res = residual_norm(y, sol.omega, times);
  if (!std::isfinite(res)) throw NumericalError("non-finite residual at the initial eigenvalues");
  sol.residual_history.push_back(res);

  double mu = opts.init_damping;
  bool finished = res <= floor;
  sol.converged = finished;
  for (int iter = 1; iter <= opts.max_iter && !finished; ++iter) {
    const BasisFactor f = factor_basis(sol.omega, times);
    const Eigen::MatrixXd jac = jacobian_t(f, y, sol.omega, times, opts.jacobian);
    const Eigen::VectorXd rvec = flatten_t(residual_t(f, y));

    Eigen::VectorXd scaling = jac.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < scaling.size(); ++j) {
      if (!(scaling(j) > 0.0)) scaling(j) = 1.0;
    }

    const Eigen::Index rows = jac.rows();
    const Eigen::Index params = jac.cols();
    Eigen::MatrixXd augmented = Eigen::MatrixXd::Zero(rows + params, params);
    augmented.topRows(rows) = jac;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows + params);
    rhs.head(rows) = -rvec;

    bool found = false;
    Eigen::VectorXcd candidate;
    double candidate_res = res;
    for (int k = 0; k < opts.max_damping_steps; ++k) {
      augmented.bottomRows(params) = (std::sqrt(mu) * scaling).asDiagonal();
      const Eigen::VectorXd step = augmented.colPivHouseholderQr().solve(rhs);
      candidate = sol.omega;
      for (Eigen::Index j = 0; j < r; ++j) candidate(j) += complex(step(j), step(r + j));
      if (project) candidate = project(candidate);
      candidate_res = residual_norm(y, candidate, times);
      if (std::isfinite(candidate_res) && candidate_res < res) {
        found = true;
        break;
      }
      mu *= opts.damping_increase;
    }

    if (!found) {
      if (iter == 1) {
        sol.converged = false;
        sol.warnings.add(WarningKind::Stall,
                         "no damping level reduced the residual at the first iteration");
      } else {
        sol.converged = true;
      }
      break;
    }
    if ((res - candidate_res) / res < opts.tol) {
      // Negligible gain: keep the current iterate so a warm restart from
      // the returned state reproduces it exactly.
      sol.converged = true;
      break;
    }
    sol.omega = candidate;
    res = candidate_res;
    sol.residual_history.push_back(res);
    ++sol.iterations;
    if (opts.verbose) std::cerr << sol.iterations << '\t' << res << '\t' << mu << '\n';
    mu /= opts.damping_increase;
    if (res <= floor) {
      sol.converged = true;
      finished = true;
    }
  }
  sol.final_damping = mu;
  sol.phi_b = project_linear(x, sol.omega, times, &sol.warnings);
  return sol;
}

ProjectedData project_data(const SnapshotMatrix& x, const RankSpec& rank) {
  const auto svd = svd_truncate(x.values(), rank);
  if (svd.rank < 1) throw DegenerateDataError("data matrix is identically zero");
  ProjectedData out;
  out.basis = svd.u.cast<complex>();
  out.coords = (svd.u.transpose() * x.values()).cast<complex>();
  return out;
}

VarproSolution solve_varpro(const SnapshotMatrix& x, const TimeGrid& t, const RankSpec& rank,
                            const Eigen::VectorXcd& init, const VarproOptions& opts) {
  if (static_cast<Eigen::Index>(t.size()) != x.n_time()) {
    throw ShapeError("time grid length does not match the number of snapshots");
  }
  const ProjectedData proj = project_data(x, rank);
  if (init.size() != proj.basis.cols()) {
    throw ConfigError("expected " + std::to_string(proj.basis.cols()) +
                      " initial eigenvalues, got " + std::to_string(init.size()));
  }
  VarproSolution sol = solve_varpro(proj.coords, t, init, opts);
  sol.phi_b = proj.basis * sol.phi_b;
  return sol;
}

Eigen::MatrixXd time_derivative(const Eigen::MatrixXd& y, std::span<const double> t) {
  const Eigen::Index m = y.cols();
  if (m < 3 || static_cast<Eigen::Index>(t.size()) != m) {
    throw ShapeError("time derivative needs at least three samples matching the grid");
  }
  Eigen::MatrixXd d(y.rows(), m);
  const auto stencil = [&](Eigen::Index k0, double c0, double c1, double c2) {
    return (c0 * y.col(k0) + c1 * y.col(k0 + 1) + c2 * y.col(k0 + 2)).eval();
  };
  for (Eigen::Index k = 0; k < m; ++k) {
    if (k == 0) {
      const double h1 = t[1] - t[0];
      const double h2 = t[2] - t[1];
      d.col(k) = stencil(0, -(2.0 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2),
                         -h1 / (h2 * (h1 + h2)));
    } else if (k == m - 1) {
      const auto km = static_cast<std::size_t>(k);
      const double h1 = t[km - 1] - t[km - 2];
      const double h2 = t[km] - t[km - 1];
      d.col(k) = stencil(k - 2, h2 / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2),
                         (2.0 * h2 + h1) / (h2 * (h1 + h2)));
    } else {
      const auto km = static_cast<std::size_t>(k);
      const double h1 = t[km] - t[km - 1];
      const double h2 = t[km + 1] - t[km];
      d.col(k) = stencil(k - 1, -h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2),
                         h1 / (h2 * (h1 + h2)));
    }
  }
  return d;
}

namespace {

// Generator eigenvalues of dZ/dt = G Z, fitted by least squares on the
// derivative-augmented projected data; keeps the r with largest weight in
// the initial state.
Eigen::VectorXcd surrogate_eigs(const Eigen::MatrixXd& y_full, std::span<const double> t,
                                int r, WarningLog* log) {
  const Eigen::VectorXd s = singular_values(y_full);
  const int q = std::max(1, numerical_rank(s));
  Eigen::MatrixXd y = y_full.topRows(std::min<Eigen::Index>(q, y_full.rows()));
  if (q < r) {
    warn(log, WarningKind::RankDeficiency,
         "projected data has rank " + std::to_string(q) + " < " + std::to_string(r) +
             "; augmenting with time derivatives for initialization");
  }
  const int blocks = (r + q - 1) / q;
  Eigen::MatrixXd z(y.rows() * blocks, y.cols());
  Eigen::MatrixXd block = y;
  for (int b = 0; b < blocks; ++b) {
    z.middleRows(b * y.rows(), y.rows()) = block;
    if (b + 1 < blocks) block = time_derivative(block, t);
  }
  const Eigen::MatrixXd dz = time_derivative(z, t);

  // G = dZ Z^+, solved as Z^T G^T = dZ^T.
  const Eigen::MatrixXd g =
      z.transpose().completeOrthogonalDecomposition().solve(dz.transpose()).transpose();
  Eigen::EigenSolver<Eigen::MatrixXd> eig(g);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigendecomposition of the surrogate generator failed");
  }
  const Eigen::VectorXcd values = eig.eigenvalues();
  if (values.size() == r) return values;

  const Eigen::MatrixXcd vecs = eig.eigenvectors();
  const Eigen::VectorXcd weights =
      vecs.completeOrthogonalDecomposition().solve(z.col(0).cast<complex>().eval());
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(weights(a)) * vecs.col(a).norm() > std::abs(weights(b)) * vecs.col(b).norm();
  });
  Eigen::VectorXcd out(r);
  for (int j = 0; j < r; ++j) out(j) = values(idx[static_cast<std::size_t>(j)]);
  return out;
}

}  // namespace

Eigen::VectorXcd init_eigs(const SnapshotMatrix& x, const TimeGrid& t, const RankSpec& rank,
                           WarningLog* log) {
  if (static_cast<Eigen::Index>(t.size()) != x.n_time()) {
    throw ShapeError("time grid length does not match the number of snapshots");
  }
  const auto svd = svd_truncate(x.values(), rank);
  const int r = svd.rank;
  if (r < 1 || svd.spectrum(0) == 0.0) {
    throw DegenerateDataError("data matrix is identically zero");
  }

  if (t.uniform_step() && x.n_time() >= 3 && r <= x.n_time() - 1) {
    const DmdResult exact = fit_exact(x, t, RankSpec::exact(r));
    if (exact.rank() == r) return exact.eigs_continuous;
  }
  if (x.n_time() < 3) throw ValidationError("initialization needs at least 3 snapshots");
  const Eigen::MatrixXd y = svd.u.transpose() * x.values();
  return surrogate_eigs(y, t.times(), r, log);
}

SplitSolution split_solution(const VarproSolution& sol) {
  const Eigen::Index r = sol.phi_b.cols();
  SplitSolution out{Eigen::MatrixXcd::Zero(sol.phi_b.rows(), r), Eigen::VectorXcd(r),
                    std::vector<bool>(static_cast<std::size_t>(r), false)};
  for (Eigen::Index j = 0; j < r; ++j) {
    const double norm = sol.phi_b.col(j).norm();
    out.amplitudes(j) = norm;
    if (norm > 0.0) {
      out.modes.col(j) = sol.phi_b.col(j) / norm;
    } else {
      out.modes(0, j) = 1.0;
      out.inactive[static_cast<std::size_t>(j)] = true;
    }
  }
  return out;
}

DmdResult fit_optimized(const SnapshotMatrix& x, const TimeGrid& t, const RankSpec& rank,
                        const VarproOptions& opts, const std::optional<Eigen::VectorXcd>& init) {
  WarningLog log;
  const Eigen::VectorXcd start = init ? *init : init_eigs(x, t, rank, &log);
  VarproSolution sol = solve_varpro(x, t, rank, start, opts);
  log.append(sol.warnings);
  const SplitSolution split = split_solution(sol);
  return assemble_result(split.modes, sol.omega, split.amplitudes, t, std::move(log));
}

}  // namespace dmdkit
