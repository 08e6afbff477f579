#include "dmdkit/csv.hpp"

#include "dmdkit/error.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

namespace dmdkit::csv {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
  cell = trim(cell);
  // from_chars rejects a leading '+', which is valid CSV input.
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (cell.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(row, col,
                     "non-numeric cell '" + std::string(cell) + "' at row " +
                         std::to_string(row) + ", column " +
                         std::to_string(col));
  }
  return value;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

Grid parse(const std::string& text) {
  Grid grid;
  std::istringstream in(text);
  std::string line;
  bool first_line = true;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    const auto content = trim(line);
    if (first_line && !content.empty() && content.front() == '#') {
      first_line = false;
      continue;
    }
    first_line = false;
    if (content.empty()) continue;

    const std::size_t row = grid.rows.size();
    std::vector<double> values;
    std::size_t start = 0;
    while (true) {
      const auto comma = content.find(',', start);
      const auto cell = content.substr(
          start, comma == std::string_view::npos ? comma : comma - start);
      values.push_back(parse_cell(cell, row, values.size()));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (row == 0) {
      width = values.size();
    } else if (values.size() != width) {
      throw FormatError("ragged rows: row 0 has " + std::to_string(width) +
                        " columns, row " + std::to_string(row) + " has " +
                        std::to_string(values.size()));
    }
    grid.rows.push_back(std::move(values));
  }
  return grid;
}

Grid read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

Eigen::MatrixXd to_matrix(const Grid& grid) {
  if (grid.rows.empty()) throw FormatError("empty CSV grid");
  const auto rows = static_cast<Eigen::Index>(grid.rows.size());
  const auto cols = static_cast<Eigen::Index>(grid.rows.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = grid.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return m;
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

void write(const std::filesystem::path& path, const Eigen::MatrixXd& values) {
  auto out = open_for_write(path);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(values(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_complex(const std::filesystem::path& stem,
                   const Eigen::MatrixXcd& values) {
  write(stem.string() + "_re.csv", values.real());
  write(stem.string() + "_im.csv", values.imag());
}

Eigen::MatrixXcd read_complex(const std::filesystem::path& stem) {
  const Eigen::MatrixXd re = to_matrix(read(stem.string() + "_re.csv"));
  const Eigen::MatrixXd im = to_matrix(read(stem.string() + "_im.csv"));
  if (re.rows() != im.rows() || re.cols() != im.cols()) {
    throw FormatError("real and imaginary parts of " + stem.string() +
                      " differ in shape");
  }
  Eigen::MatrixXcd out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

void write_column(const std::filesystem::path& path,
                  const std::vector<double>& values) {
  auto out = open_for_write(path);
  for (double v : values) out << format_double(v) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace dmdkit::csv
