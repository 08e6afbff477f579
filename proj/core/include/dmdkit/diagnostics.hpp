#pragma once

#include "dmdkit/exact_dmd.hpp"
#include "dmdkit/snapshots.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <vector>

namespace dmdkit {

/// Plot-ready contents of a fitted model: singular spectrum, both
/// eigenvalue sets, the k leading modes and their time dynamics.
struct SummaryBundle {
  Eigen::VectorXd singular_values;    // of the fitted (possibly delayed) matrix
  Eigen::VectorXcd eigs_discrete;
  Eigen::VectorXcd eigs_continuous;
  Eigen::VectorXcd amplitudes;
  std::vector<std::size_t> order;     // amplitude order of the r modes
  Eigen::MatrixXcd selected_modes;    // n_space x k, unit columns, delay-0 block
  Eigen::MatrixXcd dynamics;          // k x m, row j = b_j exp(omega_j t)
  std::vector<double> times;
  std::optional<double> dt;
  int k = 0;
  WarningLog warnings;
};

/// Permutation sorting modes by descending |b|, ties by descending Im(omega).
std::vector<std::size_t> order_modes(const DmdResult& result);

/// `fitted` is the matrix the model was fitted on (after delays). With
/// `hankel`, modes are restricted to their delay-0 block and renormalized.
/// k > r is clamped with a SelectionClamped warning.
SummaryBundle build_summary(const DmdResult& result, const SnapshotMatrix& fitted,
                            std::optional<HankelConfig> hankel = std::nullopt, int k = 3);

/// 3x3 SVG: spectrum, discrete and continuous eigenvalues; k mode profiles;
/// k dynamics traces. Eigenvalue marker radius grows with |b|. Throws
/// IoError if the file cannot be written.
void emit_svg(const SummaryBundle& bundle, const std::filesystem::path& path);

/// SVG document as a string.
std::string render_svg(const SummaryBundle& bundle);

}  // namespace dmdkit
