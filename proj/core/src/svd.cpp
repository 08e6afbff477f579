#include "dmdkit/svd.hpp"

#include "dmdkit/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <charconv>
#include <complex>

namespace dmdkit {

RankSpec RankSpec::exact(int r) {
  if (r < 1) throw ConfigError("exact rank must be positive");
  return RankSpec(Mode::Exact, r, 0.0);
}

RankSpec RankSpec::energy(double fraction) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("energy fraction must lie strictly between 0 and 1");
  }
  return RankSpec(Mode::Energy, 0, fraction);
}

RankSpec RankSpec::parse(const std::string& text) {
  if (text == "full") return full();
  if (text == "auto") return automatic();
  const char* end = text.data() + text.size();
  if (text.find_first_of(".eE") == std::string::npos) {
    int r = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), end, r);
    if (ec == std::errc() && ptr == end) return exact(r);
  } else {
    double f = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), end, f);
    if (ec == std::errc() && ptr == end) return energy(f);
  }
  throw ConfigError("invalid rank '" + text +
                    "' (expected an integer, a fraction in (0,1), full or auto)");
}

std::string RankSpec::to_string() const {
  switch (mode_) {
    case Mode::Exact: return std::to_string(rank_);
    case Mode::Energy: {
      char buf[32];
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, fraction_);
      return std::string(buf, ptr);
    }
    case Mode::Full: return "full";
    case Mode::Auto: return "auto";
  }
  return "auto";
}

namespace {

int choose_rank(const Eigen::VectorXd& s, const RankSpec& spec) {
  const int available = static_cast<int>(s.size());
  switch (spec.mode()) {
    case RankSpec::Mode::Exact:
      if (spec.rank() > available) {
        throw ConfigError("requested rank " + std::to_string(spec.rank()) +
                          " exceeds min(n, m) = " + std::to_string(available));
      }
      return spec.rank();
    case RankSpec::Mode::Full:
      return available;
    case RankSpec::Mode::Auto:
      return numerical_rank(s);
    case RankSpec::Mode::Energy: {
      const double total = s.squaredNorm();
      if (total == 0.0) return 1;
      double running = 0.0;
      for (int j = 0; j < available; ++j) {
        running += s(j) * s(j);
        if (running / total >= spec.fraction()) return j + 1;
      }
      return available;
    }
  }
  return available;
}

template <typename Scalar>
TruncatedSvd<Scalar> truncate(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& x,
    const RankSpec& spec) {
  Eigen::BDCSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> svd(
      x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TruncatedSvd<Scalar> out;
  out.spectrum = svd.singularValues();
  out.rank = choose_rank(out.spectrum, spec);
  out.u = svd.matrixU().leftCols(out.rank);
  out.s = out.spectrum.head(out.rank);
  out.v = svd.matrixV().leftCols(out.rank);
  return out;
}

}  // namespace

TruncatedSvd<double> svd_truncate(const Eigen::MatrixXd& x, const RankSpec& rank) {
  return truncate<double>(x, rank);
}

TruncatedSvd<std::complex<double>> svd_truncate(const Eigen::MatrixXcd& x,
                                                const RankSpec& rank) {
  return truncate<std::complex<double>>(x, rank);
}

Eigen::VectorXd singular_values(const Eigen::MatrixXd& x) {
  return Eigen::BDCSVD<Eigen::MatrixXd>(x).singularValues();
}

int numerical_rank(const Eigen::VectorXd& s) {
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  const double cutoff = kNumericalRankTolerance * s(0);
  return static_cast<int>(std::count_if(s.begin(), s.end(),
                                        [cutoff](double v) { return v > cutoff; }));
}

int numerical_rank(const Eigen::MatrixXd& x) {
  return numerical_rank(singular_values(x));
}

}  // namespace dmdkit
