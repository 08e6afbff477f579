#include "dmdkit/datagen.hpp"
#include "dmdkit/diagnostics.hpp"
#include "dmdkit/exact_dmd.hpp"

#include "testing.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

using namespace dmdkit;
using dmdkit::testing::to_vector;
namespace pt = boost::property_tree;

namespace {

struct Fit {
  SnapshotMatrix fitted;
  DmdResult result;
};

Fit benchmark_fit(int delays) {
  const auto [x, t] = synth_two_tone();
  const HankelConfig h{delays};
  auto fitted = hankel_embed(x, h);
  auto result = fit_exact(fitted, truncate_times(t, h), RankSpec::exact(4));
  return {std::move(fitted), std::move(result)};
}

// Frequency (cycles per unit time) of the largest plain-DFT bin of a row,
// excluding DC.
double dominant_frequency(const Eigen::RowVectorXcd& row, double dt) {
  const auto n = row.size();
  double best = -1.0;
  Eigen::Index arg = 1;
  for (Eigen::Index k = 1; k < n; ++k) {
    complex acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      acc += row(j) * std::exp(complex(0.0, -2.0 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(n)));
    }
    if (std::abs(acc) > best) {
      best = std::abs(acc);
      arg = k;
    }
  }
  // Negative frequencies live in the upper half of the bins.
  const double bin = arg <= n / 2 ? static_cast<double>(arg) : static_cast<double>(arg - n);
  return bin / (static_cast<double>(n) * dt);
}

pt::ptree parse_svg(const std::string& svg) {
  std::istringstream in(svg);
  pt::ptree tree;
  pt::read_xml(in, tree);
  return tree;
}

// Every element named `name` below `node`, depth first.
void collect(const pt::ptree& node, const std::string& name, std::vector<const pt::ptree*>& out) {
  for (const auto& [key, child] : node) {
    if (key == name) out.push_back(&child);
    collect(child, name, out);
  }
}

std::string attr(const pt::ptree& node, const std::string& name) {
  return node.get<std::string>("<xmlattr>." + name, "");
}

}  // namespace

TEST(OrderModes, DescendingAndTieBreak) {
  DmdResult r{Eigen::MatrixXcd::Identity(3, 3), to_vector({1.0, 1.0, 1.0}), to_vector({0.0, 0.0, 0.0}),
              to_vector({1.0, 3.0, 2.0}), TimeGrid({0, 1}), 1.0, {}};
  EXPECT_EQ(order_modes(r), (std::vector<std::size_t>{1, 2, 0}));
  DmdResult tie{Eigen::MatrixXcd::Identity(2, 2), to_vector({1.0, 1.0}), to_vector({{0, -2}, {0, 2}}),
                to_vector({1.0, 1.0}), TimeGrid({0, 1}), 1.0, {}};
  EXPECT_EQ(order_modes(tie), (std::vector<std::size_t>{1, 0}));
}

TEST(OrderModes, LargerSignalFirst) {
  const auto fit = benchmark_fit(10);
  const auto order = order_modes(fit.result);
  // The first pair carries the coefficient-2 component oscillating at 2.8.
  EXPECT_NEAR(std::abs(fit.result.eigs_continuous(static_cast<Eigen::Index>(order[0])).imag()), 2.8, 1e-6);
  EXPECT_NEAR(std::abs(fit.result.eigs_continuous(static_cast<Eigen::Index>(order[1])).imag()), 2.8, 1e-6);
  EXPECT_NEAR(std::abs(fit.result.eigs_continuous(static_cast<Eigen::Index>(order[2])).imag()), 2.3, 1e-6);
}

TEST(BuildSummary, BenchmarkSpectrumAndShapes) {
  const auto fit = benchmark_fit(10);
  const auto b = build_summary(fit.result, fit.fitted, HankelConfig{10});
  int above = 0;
  for (auto s : b.singular_values) above += s > 1e-10 * b.singular_values(0) ? 1 : 0;
  EXPECT_EQ(above, 4);
  EXPECT_EQ(b.k, 3);
  EXPECT_EQ(b.selected_modes.rows(), 65);
  EXPECT_EQ(b.selected_modes.cols(), 3);
  EXPECT_EQ(b.dynamics.rows(), 3);
  EXPECT_EQ(b.dynamics.cols(), 120);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(b.selected_modes.col(j).norm(), 1.0, 1e-12);
  EXPECT_TRUE(b.warnings.empty());
}

TEST(BuildSummary, DynamicsFrequencies) {
  const auto fit = benchmark_fit(10);
  const auto b = build_summary(fit.result, fit.fitted, HankelConfig{10}, 4);
  const double dt = *fit.result.dt;
  const double bin = 1.0 / (120.0 * dt);
  std::vector<double> found;
  for (Eigen::Index j = 0; j < 4; ++j) found.push_back(std::abs(dominant_frequency(b.dynamics.row(j), dt)));
  std::sort(found.begin(), found.end());
  EXPECT_NEAR(found[0], 2.3 / (2 * std::numbers::pi), bin);
  EXPECT_NEAR(found[1], 2.3 / (2 * std::numbers::pi), bin);
  EXPECT_NEAR(found[2], 2.8 / (2 * std::numbers::pi), bin);
  EXPECT_NEAR(found[3], 2.8 / (2 * std::numbers::pi), bin);
}

TEST(BuildSummary, ConstantModeDynamics) {
  Eigen::MatrixXd x(2, 4);
  x.colwise() = Eigen::Vector2d(3.0, 4.0);
  const SnapshotMatrix data(x);
  const auto r = fit_exact(data, TimeGrid::uniform(0, 1, 4), RankSpec::automatic());
  const auto b = build_summary(r, data, std::nullopt, 1);
  for (Eigen::Index c = 0; c < 4; ++c) EXPECT_NEAR(std::abs(b.dynamics(0, c) - r.amplitudes(0)), 0.0, 1e-12);
}

TEST(BuildSummary, ClampsModeCount) {
  Eigen::MatrixXd x(2, 4);
  x.colwise() = Eigen::Vector2d(3.0, 4.0);
  const SnapshotMatrix data(x);
  const auto r = fit_exact(data, TimeGrid::uniform(0, 1, 4), RankSpec::automatic());
  const auto b = build_summary(r, data);
  EXPECT_EQ(b.k, 1);
  EXPECT_TRUE(b.warnings.contains(WarningKind::SelectionClamped));
}

TEST(BuildSummary, ModesAgreeAcrossDelays) {
  const auto ref = build_summary(benchmark_fit(10).result, benchmark_fit(10).fitted, HankelConfig{10}, 4);
  for (int d : {5, 20}) {
    const auto fit = benchmark_fit(d);
    const auto b = build_summary(fit.result, fit.fitted, HankelConfig{d}, 4);
    for (Eigen::Index j = 0; j < 4; ++j) {
      // Phase-invariant match: |<a, b>| = 1 for unit vectors equal up to phase.
      const double overlap = std::abs(ref.selected_modes.col(j).dot(b.selected_modes.col(j)));
      EXPECT_NEAR(overlap, 1.0, 1e-6) << "d=" << d << " mode " << j;
    }
  }
}

TEST(BuildSummary, ReconstructionDecomposition) {
  const auto fit = benchmark_fit(10);
  const auto b = build_summary(fit.result, fit.fitted, std::nullopt, 4);
  const Eigen::MatrixXcd rec = reconstruct(fit.result, fit.result.time);
  EXPECT_LE((rec - b.selected_modes * b.dynamics).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RenderSvg, WellFormedWithNinePanels) {
  const auto fit = benchmark_fit(10);
  const auto b = build_summary(fit.result, fit.fitted, HankelConfig{10});
  const auto tree = parse_svg(render_svg(b));
  std::vector<const pt::ptree*> groups;
  collect(tree, "g", groups);
  std::set<std::string> ids;
  int panels = 0;
  for (const auto* g : groups) {
    if (attr(*g, "class") == "panel") {
      ++panels;
      ids.insert(attr(*g, "id"));
    }
  }
  EXPECT_EQ(panels, 9);
  for (const char* id : {"singular-values", "eigs-discrete", "eigs-continuous", "mode-1", "mode-2",
                         "mode-3", "dynamics-1", "dynamics-2", "dynamics-3"}) {
    EXPECT_TRUE(ids.contains(id)) << id;
  }
}

TEST(RenderSvg, MarkersPerPanelAndPosition) {
  const auto fit = benchmark_fit(10);
  const auto b = build_summary(fit.result, fit.fitted, HankelConfig{10});
  const auto tree = parse_svg(render_svg(b));
  std::vector<const pt::ptree*> groups;
  collect(tree, "g", groups);
  double peak = 0.0;
  for (auto a : b.amplitudes) peak = std::max(peak, std::abs(a));
  for (const auto* g : groups) {
    const auto id = attr(*g, "id");
    if (id != "eigs-discrete" && id != "eigs-continuous") continue;
    std::vector<const pt::ptree*> circles;
    collect(*g, "circle", circles);
    int markers = 0;
    std::vector<double> radii;
    for (const auto* c : circles) {
      if (attr(*c, "class") != "eig-marker") continue;
      ++markers;
      radii.push_back(std::stod(attr(*c, "r")));
      if (id == "eigs-continuous") {
        EXPECT_LE(std::abs(std::stod(attr(*c, "data-re"))), 1e-3);
      }
    }
    EXPECT_EQ(markers, 4) << id;
    // Larger amplitude, larger marker.
    for (Eigen::Index j = 0; j < 4; ++j)
      EXPECT_NEAR(radii[static_cast<std::size_t>(j)], 3.0 + 7.0 * std::abs(b.amplitudes(j)) / peak, 1e-4);
  }
}

TEST(EmitSvg, UnwritablePath) {
  const auto fit = benchmark_fit(10);
  const auto b = build_summary(fit.result, fit.fitted, HankelConfig{10});
  EXPECT_THROW(emit_svg(b, "/nonexistent/dir/summary.svg"), IoError);
  dmdkit::testing::TempDir dir;
  emit_svg(b, dir / "s.svg");
  EXPECT_EQ(dmdkit::testing::read_text(dir / "s.svg"), render_svg(b));
}
