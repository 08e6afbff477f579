#pragma once

#include "dmdkit/bopdmd.hpp"
#include "dmdkit/svd.hpp"
#include "dmdkit/varpro.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dmdkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

enum class Method { Exact, OptDmd, BopDmd };

std::string method_name(Method m);
Method parse_method(const std::string& text);

/// Effective settings of one `fit` run.
struct RunConfig {
  Method method = Method::Exact;
  RankSpec rank = RankSpec::automatic();
  int delays = 1;
  bool center = false;
  bool transpose = false;
  std::filesystem::path input;
  std::optional<std::filesystem::path> times;
  std::optional<double> dt;
  std::filesystem::path out;
  std::optional<BopConfig> bop;
  VarproOptions varpro;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  int summary_modes = 3;

  /// Throws ConfigError when the combination is invalid.
  void validate() const;
};

/// Entry point shared by the executable and the tests. Returns the exit
/// status; diagnostics go to `err`, normal output to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_fit(const RunConfig& cfg, std::ostream& err);

}  // namespace dmdkit::cli
