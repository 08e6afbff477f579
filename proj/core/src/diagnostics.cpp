#include "dmdkit/diagnostics.hpp"

#include "dmdkit/csv.hpp"
#include "dmdkit/svd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

namespace dmdkit {

std::vector<std::size_t> order_modes(const DmdResult& result) {
  return amplitude_order(result.amplitudes, result.eigs_continuous);
}

SummaryBundle build_summary(const DmdResult& result, const SnapshotMatrix& fitted,
                            std::optional<HankelConfig> hankel, int k) {
  SummaryBundle out;
  const int r = result.rank();
  if (k < 1) k = 1;
  if (k > r) {
    out.warnings.add(WarningKind::SelectionClamped,
                     "requested " + std::to_string(k) + " modes but the model has rank " +
                         std::to_string(r));
    k = r;
  }
  const Eigen::Index n_full = result.modes.rows();
  Eigen::Index n_space = n_full;
  if (hankel && hankel->delays > 1) {
    if (n_full % hankel->delays != 0) {
      throw ShapeError("mode length is not a multiple of the number of delays");
    }
    n_space = n_full / hankel->delays;
  }

  out.singular_values = singular_values(fitted.values());
  out.eigs_discrete = result.eigs_discrete;
  out.eigs_continuous = result.eigs_continuous;
  out.amplitudes = result.amplitudes;
  out.order = order_modes(result);
  out.k = k;
  out.dt = result.dt;
  const auto times = result.time.times();
  out.times.assign(times.begin(), times.end());

  const auto m = static_cast<Eigen::Index>(times.size());
  out.selected_modes.resize(n_space, k);
  out.dynamics.resize(k, m);
  for (int j = 0; j < k; ++j) {
    const auto src = static_cast<Eigen::Index>(out.order[static_cast<std::size_t>(j)]);
    Eigen::VectorXcd block = result.modes.col(src).head(n_space);
    if (n_space != n_full) {
      const double norm = block.norm();
      if (norm > 0.0) block /= norm;
    }
    out.selected_modes.col(j) = block;
    for (Eigen::Index c = 0; c < m; ++c) {
      out.dynamics(j, c) = result.amplitudes(src) *
                           std::exp(result.eigs_continuous(src) * times[static_cast<std::size_t>(c)]);
    }
  }
  return out;
}

namespace {

constexpr double kPanelW = 320.0;
constexpr double kPanelH = 260.0;
constexpr double kMargin = 42.0;
constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// Maps data coordinates into one panel's plotting area.
class Axes {
 public:
  Axes(double x0, double x1, double y0, double y1) {
    if (!(x1 > x0)) { x0 -= 1.0; x1 += 1.0; }
    if (!(y1 > y0)) { y0 -= 1.0; y1 += 1.0; }
    const double px = 0.05 * (x1 - x0);
    const double py = 0.05 * (y1 - y0);
    x0_ = x0 - px; x1_ = x1 + px; y0_ = y0 - py; y1_ = y1 + py;
  }
  double sx(double x) const { return kMargin + (x - x0_) / (x1_ - x0_) * (kPanelW - 1.5 * kMargin); }
  double sy(double y) const { return kPanelH - kMargin - (y - y0_) / (y1_ - y0_) * (kPanelH - 1.7 * kMargin); }
  double x0() const { return x0_; }
  double x1() const { return x1_; }
  double y0() const { return y0_; }
  double y1() const { return y1_; }

 private:
  double x0_, x1_, y0_, y1_;
};

void frame(std::ostringstream& s, const Axes& ax, const std::string& title,
           const std::string& xlabel, const std::string& ylabel) {
  s << "<rect x=\"0\" y=\"0\" width=\"" << kPanelW << "\" height=\"" << kPanelH
    << "\" fill=\"white\" stroke=\"#cccccc\"/>\n";
  s << "<text x=\"" << kPanelW / 2 << "\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">"
    << title << "</text>\n";
  s << "<line x1=\"" << num(ax.sx(ax.x0())) << "\" y1=\"" << num(ax.sy(ax.y0())) << "\" x2=\""
    << num(ax.sx(ax.x1())) << "\" y2=\"" << num(ax.sy(ax.y0())) << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << num(ax.sx(ax.x0())) << "\" y1=\"" << num(ax.sy(ax.y0())) << "\" x2=\""
    << num(ax.sx(ax.x0())) << "\" y2=\"" << num(ax.sy(ax.y1())) << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << kPanelW / 2 << "\" y=\"" << kPanelH - 8
    << "\" text-anchor=\"middle\" font-size=\"11\">" << xlabel << "</text>\n";
  s << "<text x=\"12\" y=\"" << kPanelH / 2 << "\" font-size=\"11\" transform=\"rotate(-90 12 "
    << kPanelH / 2 << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  s << "<text x=\"" << num(ax.sx(ax.x0())) << "\" y=\"" << num(ax.sy(ax.y0()) + 12)
    << "\" font-size=\"9\">" << num(ax.x0()) << "</text>\n";
  s << "<text x=\"" << num(ax.sx(ax.x1())) << "\" y=\"" << num(ax.sy(ax.y0()) + 12)
    << "\" font-size=\"9\" text-anchor=\"end\">" << num(ax.x1()) << "</text>\n";
}

void polyline(std::ostringstream& s, const Axes& ax, const std::vector<double>& x,
              const std::vector<double>& y, const char* color, const char* dash = nullptr) {
  s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
  if (dash != nullptr) s << " stroke-dasharray=\"" << dash << "\"";
  s << " points=\"";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i > 0) s << ' ';
    s << num(ax.sx(x[i])) << ',' << num(ax.sy(y[i]));
  }
  s << "\"/>\n";
}

// Color of each mode follows its position in the amplitude order.
std::vector<const char*> mode_colors(const SummaryBundle& b) {
  std::vector<const char*> colors(b.order.size(), "#7f7f7f");
  for (std::size_t rank = 0; rank < b.order.size(); ++rank) {
    colors[b.order[rank]] = rank < static_cast<std::size_t>(b.k) ? kPalette[rank % kPalette.size()]
                                                                  : "#7f7f7f";
  }
  return colors;
}

void eigen_panel(std::ostringstream& s, const SummaryBundle& b, const Eigen::VectorXcd& eigs,
                 bool unit_circle, const std::string& title) {
  double x0 = unit_circle ? -1.0 : 0.0, x1 = unit_circle ? 1.0 : 0.0;
  double y0 = unit_circle ? -1.0 : 0.0, y1 = unit_circle ? 1.0 : 0.0;
  for (Eigen::Index j = 0; j < eigs.size(); ++j) {
    x0 = std::min(x0, eigs(j).real()); x1 = std::max(x1, eigs(j).real());
    y0 = std::min(y0, eigs(j).imag()); y1 = std::max(y1, eigs(j).imag());
  }
  if (!unit_circle) {
    const double half = 0.5 * std::max(x1 - x0, 0.2 * (y1 - y0));
    const double mid = 0.5 * (x0 + x1);
    x0 = mid - half; x1 = mid + half;
  }
  const Axes ax(x0, x1, y0, y1);
  frame(s, ax, title, "Re", "Im");
  if (unit_circle) {
    std::vector<double> cx, cy;
    for (int i = 0; i <= 128; ++i) {
      const double a = 2.0 * std::numbers::pi * i / 128.0;
      cx.push_back(std::cos(a));
      cy.push_back(std::sin(a));
    }
    polyline(s, ax, cx, cy, "#999999", "4,3");
  } else {
    s << "<line x1=\"" << num(ax.sx(0.0)) << "\" y1=\"" << num(ax.sy(ax.y0())) << "\" x2=\""
      << num(ax.sx(0.0)) << "\" y2=\"" << num(ax.sy(ax.y1()))
      << "\" stroke=\"#999999\" stroke-dasharray=\"4,3\"/>\n";
  }
  const double peak = b.amplitudes.size() > 0 ? b.amplitudes.cwiseAbs().maxCoeff() : 1.0;
  const auto colors = mode_colors(b);
  for (Eigen::Index j = 0; j < eigs.size(); ++j) {
    const double weight = peak > 0.0 ? std::abs(b.amplitudes(j)) / peak : 1.0;
    s << "<circle class=\"eig-marker\" data-re=\"" << csv::format_double(eigs(j).real())
      << "\" data-im=\"" << csv::format_double(eigs(j).imag()) << "\" cx=\""
      << num(ax.sx(eigs(j).real())) << "\" cy=\"" << num(ax.sy(eigs(j).imag())) << "\" r=\""
      << num(3.0 + 7.0 * weight) << "\" fill=\"" << colors[static_cast<std::size_t>(j)]
      << "\" fill-opacity=\"0.75\" stroke=\"black\"/>\n";
  }
}

void spectrum_panel(std::ostringstream& s, const SummaryBundle& b) {
  const Eigen::VectorXd& sv = b.singular_values;
  const double top = sv.size() > 0 && sv(0) > 0.0 ? sv(0) : 1.0;
  std::vector<double> x, y;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    x.push_back(static_cast<double>(i + 1));
    y.push_back(std::log10(std::max(sv(i) / top, 1e-18)));
  }
  const Axes ax(1.0, std::max(2.0, static_cast<double>(sv.size())), y.empty() ? -1.0 : *std::min_element(y.begin(), y.end()), 0.0);
  frame(s, ax, "Singular values", "index", "log10(sigma/sigma_1)");
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool kept = static_cast<Eigen::Index>(i) < b.eigs_continuous.size();
    s << "<circle class=\"sv-marker\" cx=\"" << num(ax.sx(x[i])) << "\" cy=\"" << num(ax.sy(y[i]))
      << "\" r=\"3\" fill=\"" << (kept ? "#1f77b4" : "#bbbbbb") << "\"/>\n";
  }
}

void mode_panel(std::ostringstream& s, const SummaryBundle& b, int slot) {
  if (slot >= b.k) {
    const Axes ax(0.0, 1.0, 0.0, 1.0);
    frame(s, ax, "Mode " + std::to_string(slot + 1) + " (none)", "space index", "");
    return;
  }
  const Eigen::VectorXcd mode = b.selected_modes.col(slot);
  std::vector<double> x, re, im;
  for (Eigen::Index i = 0; i < mode.size(); ++i) {
    x.push_back(static_cast<double>(i));
    re.push_back(mode(i).real());
    im.push_back(mode(i).imag());
  }
  const double lo = std::min(*std::min_element(re.begin(), re.end()), *std::min_element(im.begin(), im.end()));
  const double hi = std::max(*std::max_element(re.begin(), re.end()), *std::max_element(im.begin(), im.end()));
  const Axes ax(0.0, std::max(1.0, static_cast<double>(mode.size() - 1)), lo, hi);
  const auto j = b.order[static_cast<std::size_t>(slot)];
  frame(s, ax, "Mode " + std::to_string(slot + 1) + " (omega = " + num(b.eigs_continuous(static_cast<Eigen::Index>(j)).real()) +
                   (b.eigs_continuous(static_cast<Eigen::Index>(j)).imag() < 0 ? " - " : " + ") +
                   num(std::abs(b.eigs_continuous(static_cast<Eigen::Index>(j)).imag())) + "i)",
        "space index", "Re (solid), Im (dashed)");
  const char* color = kPalette[static_cast<std::size_t>(slot) % kPalette.size()];
  polyline(s, ax, x, re, color);
  polyline(s, ax, x, im, color, "4,3");
}

void dynamics_panel(std::ostringstream& s, const SummaryBundle& b, int slot) {
  if (slot >= b.k) {
    const Axes ax(0.0, 1.0, 0.0, 1.0);
    frame(s, ax, "Dynamics " + std::to_string(slot + 1) + " (none)", "t", "");
    return;
  }
  std::vector<double> re;
  for (Eigen::Index c = 0; c < b.dynamics.cols(); ++c) re.push_back(b.dynamics(slot, c).real());
  const double lo = re.empty() ? 0.0 : *std::min_element(re.begin(), re.end());
  const double hi = re.empty() ? 1.0 : *std::max_element(re.begin(), re.end());
  const Axes ax(b.times.empty() ? 0.0 : b.times.front(), b.times.empty() ? 1.0 : b.times.back(), lo, hi);
  frame(s, ax, "Dynamics " + std::to_string(slot + 1), "t", "Re b exp(omega t)");
  polyline(s, ax, b.times, re, kPalette[static_cast<std::size_t>(slot) % kPalette.size()]);
}

}  // namespace

std::string render_svg(const SummaryBundle& b) {
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 3 * kPanelW << "\" height=\""
    << 3 * kPanelH << "\" viewBox=\"0 0 " << 3 * kPanelW << ' ' << 3 * kPanelH
    << "\" font-family=\"sans-serif\">\n";
  const auto open = [&](const char* id, int row, int col) {
    s << "<g class=\"panel\" id=\"" << id << "\" transform=\"translate(" << col * kPanelW << ','
      << row * kPanelH << ")\">\n";
  };
  open("singular-values", 0, 0);
  spectrum_panel(s, b);
  s << "</g>\n";
  open("eigs-discrete", 0, 1);
  eigen_panel(s, b, b.eigs_discrete, true, "Discrete-time eigenvalues");
  s << "</g>\n";
  open("eigs-continuous", 0, 2);
  eigen_panel(s, b, b.eigs_continuous, false, "Continuous-time eigenvalues");
  s << "</g>\n";
  for (int slot = 0; slot < 3; ++slot) {
    const std::string id = "mode-" + std::to_string(slot + 1);
    open(id.c_str(), 1, slot);
    mode_panel(s, b, slot);
    s << "</g>\n";
  }
  for (int slot = 0; slot < 3; ++slot) {
    const std::string id = "dynamics-" + std::to_string(slot + 1);
    open(id.c_str(), 2, slot);
    dynamics_panel(s, b, slot);
    s << "</g>\n";
  }
  s << "</svg>\n";
  return s.str();
}

void emit_svg(const SummaryBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << render_svg(bundle);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace dmdkit
