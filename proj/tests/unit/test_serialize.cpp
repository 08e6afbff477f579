#include "dmdkit/datagen.hpp"
#include "dmdkit/serialize.hpp"

#include "testing.hpp"

using namespace dmdkit;
using dmdkit::testing::TempDir;
using dmdkit::testing::to_vector;
using dmdkit::testing::write_text;

namespace {

io::ModelFile benchmark_model() {
  const auto [x, t] = synth_two_tone();
  const auto centered = center(x);
  auto fit = fit_exact(hankel_embed(centered.data, {10}), truncate_times(t, {10}), RankSpec::exact(4));
  return {"exact", std::move(fit), 10, 65, centered.mean};
}

}  // namespace

TEST(Json, ComplexEncoding) {
  const auto j = io::to_json(complex(1.5, -2.0));
  EXPECT_EQ(j["re"], 1.5);
  EXPECT_EQ(j["im"], -2.0);
  const auto v = to_vector({{1, 2}, {3, -4}});
  EXPECT_EQ(io::complex_vector_from_json(io::to_json(v)), v);
  EXPECT_THROW(io::complex_vector_from_json(io::json::parse("[1, 2]")), FormatError);
  EXPECT_THROW(io::complex_vector_from_json(io::json::parse("{}")), FormatError);
}

TEST(Model, RoundTrip) {
  TempDir dir;
  const auto model = benchmark_model();
  io::write_model(model, dir.path());
  const auto back = io::read_model(dir / "model.json");
  EXPECT_EQ(back.method, "exact");
  EXPECT_EQ(back.delays, 10);
  EXPECT_EQ(back.n_space, 65);
  ASSERT_TRUE(back.mean.has_value());
  EXPECT_EQ(*back.mean, *model.mean);
  EXPECT_EQ(back.result.eigs_continuous, model.result.eigs_continuous);
  EXPECT_EQ(back.result.amplitudes, model.result.amplitudes);
  EXPECT_EQ(back.result.modes, model.result.modes);
  EXPECT_EQ(back.result.dt, model.result.dt);
  EXPECT_EQ(reconstruct(back.result, model.result.time), reconstruct(model.result, model.result.time));
}

TEST(Model, KeysPresent) {
  const auto j = io::model_json(benchmark_model());
  for (const char* key : {"method", "rank", "dt", "eigs_discrete", "eigs_continuous", "amplitudes", "modes",
                          "times", "delays", "n_space", "center_mean"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["rank"], 4);
}

TEST(Model, MalformedFilesAreFormatErrors) {
  TempDir dir;
  io::write_model(benchmark_model(), dir.path());
  const std::string good = dmdkit::testing::read_text(dir / "model.json");

  write_text(dir / "model.json", "{not json");
  EXPECT_THROW(io::read_model(dir / "model.json"), FormatError);

  auto j = io::json::parse(good);
  j.erase("eigs_continuous");
  write_text(dir / "model.json", j.dump());
  EXPECT_THROW(io::read_model(dir / "model.json"), FormatError);

  j = io::json::parse(good);
  j["rank"] = 3;
  write_text(dir / "model.json", j.dump());
  EXPECT_THROW(io::read_model(dir / "model.json"), FormatError);

  j = io::json::parse(good);
  j["times"] = {3.0, 1.0};
  write_text(dir / "model.json", j.dump());
  EXPECT_THROW(io::read_model(dir / "model.json"), FormatError);

  j = io::json::parse(good);
  j["dt"] = "fast";
  write_text(dir / "model.json", j.dump());
  EXPECT_THROW(io::read_model(dir / "model.json"), FormatError);

  EXPECT_THROW(io::read_model(dir / "missing.json"), IoError);
}

TEST(Summary, FilesWritten) {
  TempDir dir;
  const auto [x, t] = synth_two_tone();
  const auto fitted = hankel_embed(x, {10});
  const auto fit = fit_exact(fitted, truncate_times(t, {10}), RankSpec::exact(4));
  const auto bundle = build_summary(fit, fitted, HankelConfig{10});
  io::write_summary(bundle, dir.path());
  for (const char* f : {"summary.json", "selected_modes_re.csv", "selected_modes_im.csv", "dynamics_re.csv",
                        "dynamics_im.csv", "singular_values.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto j = io::read_json(dir / "summary.json");
  EXPECT_EQ(j["eigs_continuous"].size(), 4u);
  EXPECT_EQ(j["eigs_discrete"].size(), 4u);
  EXPECT_EQ(j["order"].size(), 4u);
  EXPECT_EQ(j["k"], 3);
  EXPECT_EQ(j["times"].size(), 120u);
}

TEST(BagStatistics, ConfigEcho) {
  BagStatistics stats;
  stats.omega_mean = to_vector({{0, 1}});
  stats.omega_std = to_vector({{0, 0.1}});
  stats.amplitude_mean = to_vector({2.0});
  stats.amplitude_std = Eigen::VectorXd::Constant(1, 0.5);
  stats.trials_converged = 7;
  stats.num_trials = 8;
  BopConfig cfg;
  cfg.num_trials = 8;
  cfg.eig_constraints = {EigConstraint::Imag};
  cfg.seed = 11;
  const auto j = io::bag_statistics_json(stats, cfg, RankSpec::exact(1));
  EXPECT_EQ(j["trials_converged"], 7);
  EXPECT_EQ(j["config"]["seed"], 11);
  EXPECT_EQ(j["config"]["eig_constraints"][0], "imag");
  EXPECT_EQ(j["config"]["trial_size"], 0.8);
  EXPECT_EQ(j["omega_std"][0]["im"], 0.1);
}
