#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace dmdkit::csv {

/// Parsed numeric grid, row-major. Cells may be non-finite; callers validate.
struct Grid {
  std::vector<std::vector<double>> rows;
};

/// Parses comma-separated decimal reals. One optional header line starting
/// with '#' is skipped, blank lines are ignored. Throws IoError when the file
/// cannot be opened, ParseError on a non-numeric cell and FormatError when
/// rows are ragged.
Grid read(const std::filesystem::path& path);
Grid parse(const std::string& text);

Eigen::MatrixXd to_matrix(const Grid& grid);

/// Shortest representation that round-trips to the same double.
std::string format_double(double value);

/// Writes one CSV line per matrix row. Throws IoError when unwritable.
void write(const std::filesystem::path& path, const Eigen::MatrixXd& values);
/// Writes `<stem>_re.csv` and `<stem>_im.csv` next to each other.
void write_complex(const std::filesystem::path& stem,
                   const Eigen::MatrixXcd& values);
Eigen::MatrixXcd read_complex(const std::filesystem::path& stem);
/// One value per line.
void write_column(const std::filesystem::path& path,
                  const std::vector<double>& values);

}  // namespace dmdkit::csv
