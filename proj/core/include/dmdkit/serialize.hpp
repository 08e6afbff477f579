#pragma once

#include "dmdkit/bopdmd.hpp"
#include "dmdkit/diagnostics.hpp"
#include "dmdkit/exact_dmd.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace dmdkit::io {

using json = nlohmann::json;

json to_json(complex z);
json to_json(const Eigen::VectorXcd& v);
Eigen::VectorXcd complex_vector_from_json(const json& j);

/// A fitted model on disk: model.json plus a modes_re.csv / modes_im.csv
/// pair next to it.
struct ModelFile {
  std::string method;
  DmdResult result;
  int delays = 1;
  Eigen::Index n_space = 0;              // rows of the original (un-delayed) data
  std::optional<Eigen::VectorXd> mean;   // present when the data was centered
};

/// Writes `<dir>/model.json` and `<dir>/modes_{re,im}.csv`.
void write_model(const ModelFile& model, const std::filesystem::path& dir);
/// Throws FormatError on malformed content and IoError on missing files.
ModelFile read_model(const std::filesystem::path& model_json);

json model_json(const ModelFile& model);

/// BagStatistics plus the configuration that produced them.
json bag_statistics_json(const BagStatistics& stats, const BopConfig& cfg, const RankSpec& rank);

/// summary.json; modes and dynamics go to CSV pairs via write_summary().
json summary_json(const SummaryBundle& bundle);
/// summary.json, selected_modes_{re,im}.csv, dynamics_{re,im}.csv and
/// singular_values.csv into `dir`.
void write_summary(const SummaryBundle& bundle, const std::filesystem::path& dir);

void write_json(const json& j, const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);

}  // namespace dmdkit::io
