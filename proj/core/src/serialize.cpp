#include "dmdkit/serialize.hpp"

#include "dmdkit/csv.hpp"

#include <fstream>

namespace dmdkit::io {

json to_json(complex z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

json to_json(const Eigen::VectorXcd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(to_json(v(i)));
  return arr;
}

Eigen::VectorXcd complex_vector_from_json(const json& j) {
  if (!j.is_array()) throw FormatError("expected an array of complex numbers");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& z = j[i];
    if (!z.is_object() || !z.contains("re") || !z.contains("im") || !z["re"].is_number() ||
        !z["im"].is_number()) {
      throw FormatError("complex entries must be objects {\"re\": x, \"im\": y}");
    }
    v(static_cast<Eigen::Index>(i)) = complex(z["re"].get<double>(), z["im"].get<double>());
  }
  return v;
}

namespace {

json real_array(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw FormatError(std::string("model file lacks key '") + key + "'");
  }
  return j[key];
}

}  // namespace

json model_json(const ModelFile& model) {
  const auto& r = model.result;
  const auto times = r.time.times();
  json j;
  j["method"] = model.method;
  j["rank"] = r.rank();
  j["dt"] = optional_number(r.dt);
  j["eigs_discrete"] = to_json(r.eigs_discrete);
  j["eigs_continuous"] = to_json(r.eigs_continuous);
  j["amplitudes"] = to_json(r.amplitudes);
  j["modes"] = {{"re", "modes_re.csv"}, {"im", "modes_im.csv"}};
  j["times"] = std::vector<double>(times.begin(), times.end());
  j["delays"] = model.delays;
  j["n_space"] = model.n_space;
  j["center_mean"] = model.mean ? real_array(*model.mean) : json(nullptr);
  return j;
}

void write_model(const ModelFile& model, const std::filesystem::path& dir) {
  write_json(model_json(model), dir / "model.json");
  csv::write_complex(dir / "modes", model.result.modes);
}

ModelFile read_model(const std::filesystem::path& model_json_path) {
  const json j = read_json(model_json_path);
  const auto dir = model_json_path.parent_path();
  try {
    ModelFile out{require(j, "method").get<std::string>(),
                  DmdResult{Eigen::MatrixXcd(), complex_vector_from_json(require(j, "eigs_discrete")),
                            complex_vector_from_json(require(j, "eigs_continuous")),
                            complex_vector_from_json(require(j, "amplitudes")),
                            TimeGrid(require(j, "times").get<std::vector<double>>()),
                            std::nullopt,
                            {}},
                  j.value("delays", 1), j.value("n_space", Eigen::Index{0}), std::nullopt};
    const auto& dt = require(j, "dt");
    if (!dt.is_null()) out.result.dt = dt.get<double>();
    const auto& modes = require(j, "modes");
    const Eigen::MatrixXd re =
        csv::to_matrix(csv::read(dir / modes.at("re").get<std::string>()));
    const Eigen::MatrixXd im =
        csv::to_matrix(csv::read(dir / modes.at("im").get<std::string>()));
    if (re.rows() != im.rows() || re.cols() != im.cols()) {
      throw FormatError("mode real and imaginary parts differ in shape");
    }
    out.result.modes.resize(re.rows(), re.cols());
    out.result.modes.real() = re;
    out.result.modes.imag() = im;
    const Eigen::Index r = out.result.eigs_continuous.size();
    if (out.result.modes.cols() != r || out.result.amplitudes.size() != r ||
        require(j, "rank").get<Eigen::Index>() != r) {
      throw FormatError("model rank is inconsistent across fields");
    }
    if (out.n_space <= 0) out.n_space = out.result.modes.rows() / std::max(out.delays, 1);
    if (out.delays < 1 || out.n_space * out.delays != out.result.modes.rows()) {
      throw FormatError("model delays and n_space do not match the mode length");
    }
    if (j.contains("center_mean") && !j["center_mean"].is_null()) {
      const auto mean = j["center_mean"].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(mean.size()) != out.n_space) {
        throw FormatError("center_mean length does not match n_space");
      }
      out.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), out.n_space);
    }
    return out;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  } catch (const ValidationError& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

json bag_statistics_json(const BagStatistics& stats, const BopConfig& cfg, const RankSpec& rank) {
  json constraints = json::array();
  for (auto c : cfg.eig_constraints) constraints.push_back(constraint_name(c));
  json trial_size;
  if (const auto* f = std::get_if<double>(&cfg.trial_size)) {
    trial_size = *f;
  } else {
    trial_size = std::get<std::size_t>(cfg.trial_size);
  }
  json j;
  j["omega_mean"] = to_json(stats.omega_mean);
  j["omega_std"] = to_json(stats.omega_std);
  j["amplitude_mean"] = to_json(stats.amplitude_mean);
  json amp_std = json::array();
  for (Eigen::Index i = 0; i < stats.amplitude_std.size(); ++i) {
    amp_std.push_back(to_json(complex(stats.amplitude_std(i), 0.0)));
  }
  j["amplitude_std"] = amp_std;
  j["trials_converged"] = stats.trials_converged;
  j["config"] = {
      {"num_trials", cfg.num_trials},
      {"trial_size", trial_size},
      {"eig_constraints", constraints},
      {"seed", cfg.seed},
      {"rank", rank.to_string()},
      {"varpro",
       {{"tol", cfg.varpro.tol},
        {"max_iter", cfg.varpro.max_iter},
        {"init_damping", cfg.varpro.init_damping},
        {"damping_increase", cfg.varpro.damping_increase},
        {"max_damping_steps", cfg.varpro.max_damping_steps},
        {"jacobian", cfg.varpro.jacobian == JacobianKind::Kaufman ? "kaufman" : "golub_pereyra"}}}};
  return j;
}

json summary_json(const SummaryBundle& b) {
  json j;
  j["singular_values"] = real_array(b.singular_values);
  j["eigs_discrete"] = to_json(b.eigs_discrete);
  j["eigs_continuous"] = to_json(b.eigs_continuous);
  j["amplitudes"] = to_json(b.amplitudes);
  j["order"] = b.order;
  j["k"] = b.k;
  j["dt"] = optional_number(b.dt);
  j["times"] = b.times;
  return j;
}

void write_summary(const SummaryBundle& bundle, const std::filesystem::path& dir) {
  write_json(summary_json(bundle), dir / "summary.json");
  csv::write_complex(dir / "selected_modes", bundle.selected_modes);
  csv::write_complex(dir / "dynamics", bundle.dynamics);
  csv::write_column(dir / "singular_values.csv",
                    std::vector<double>(bundle.singular_values.begin(), bundle.singular_values.end()));
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace dmdkit::io
