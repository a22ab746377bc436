#include "dtrkit/svg.hpp"

#include "dtrkit/error.hpp"
#include "dtrkit/rmt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace dtrkit::svg {

namespace {

constexpr double kWidth = 800;
constexpr double kHeight = 480;
constexpr double kLeft = 70;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 70;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void header(std::ostream& os, const std::string& title, double w = kWidth, double h = kHeight) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
     << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
     << "</text>\n";
}

struct YScale {
  double lo, hi;
  double operator()(double v) const {
    return kTop + (kHeight - kTop - kBottom) * (1.0 - (v - lo) / (hi - lo));
  }
};

YScale make_scale(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::abs(lo) > 0 ? 0.05 * std::abs(lo) : 1.0;
    lo -= pad;
    hi += pad;
  } else {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi};
}

void axes(std::ostream& os, const YScale& y) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kTop, y1 = kHeight - kBottom;
  os << "<g stroke=\"black\" fill=\"none\"><path d=\"M" << num(x0) << ' ' << num(y0) << " L" << num(x0) << ' '
     << num(y1) << " L" << num(x1) << ' ' << num(y1) << "\"/></g>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = y.lo + (y.hi - y.lo) * t / 4.0;
    os << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(y(v) + 4) << "\" text-anchor=\"end\">" << label_num(v)
       << "</text>\n";
  }
}

void x_label(std::ostream& os, double x, const std::string& text) {
  const double y = kHeight - kBottom + 14;
  os << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"end\" transform=\"rotate(-45 " << num(x)
     << ' ' << num(y) << ")\">" << escape(text) << "</text>\n";
}

}  // namespace

std::string heat_color(double v, double lo, double hi) {
  if (std::isnan(v)) return "#bdbdbd";
  const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
  const auto r = static_cast<int>(std::lround(255.0 * std::min(1.0, 2.0 * t)));
  const auto g = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(2.0 * t - 1.0))));
  const auto b = static_cast<int>(std::lround(255.0 * std::min(1.0, 2.0 * (1.0 - t))));
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

void write_boxplot(std::ostream& os, const std::string& title, const std::vector<BoxGroup>& groups) {
  if (groups.empty()) throw UsageError("boxplot: no groups");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t total = 0;
  for (const auto& g : groups)
    for (double v : g.values)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        ++total;
      }
  if (total == 0) throw UsageError("boxplot: no finite values");
  const auto y = make_scale(lo, hi);
  header(os, title);
  axes(os, y);
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(groups.size());
  const double half = std::min(0.3 * slot, 20.0);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const double cx = kLeft + slot * (static_cast<double>(k) + 0.5);
    x_label(os, cx, groups[k].label);
    std::vector<double> v;
    for (double x : groups[k].values)
      if (std::isfinite(x)) v.push_back(x);
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    const double q1 = quantile_sorted(v, 0.25), med = quantile_sorted(v, 0.5), q3 = quantile_sorted(v, 0.75);
    const double fence_lo = q1 - 1.5 * (q3 - q1), fence_hi = q3 + 1.5 * (q3 - q1);
    double wlo = med, whi = med;
    for (double x : v) {
      if (x >= fence_lo) wlo = std::min(wlo, x);
      if (x <= fence_hi) whi = std::max(whi, x);
    }
    os << "<g stroke=\"black\">";
    os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y(wlo)) << "\" x2=\"" << num(cx) << "\" y2=\"" << num(y(q1))
       << "\"/>";
    os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(y(q3)) << "\" x2=\"" << num(cx) << "\" y2=\"" << num(y(whi))
       << "\"/>";
    os << "<rect x=\"" << num(cx - half) << "\" y=\"" << num(y(q3)) << "\" width=\"" << num(2 * half)
       << "\" height=\"" << num(y(q1) - y(q3)) << "\" fill=\"#c6dbef\"/>";
    os << "<line x1=\"" << num(cx - half) << "\" y1=\"" << num(y(med)) << "\" x2=\"" << num(cx + half) << "\" y2=\""
       << num(y(med)) << "\" stroke-width=\"2\"/>";
    for (double x : v)
      if (x < fence_lo || x > fence_hi)
        os << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(y(x)) << "\" r=\"2\" fill=\"none\"/>";
    os << "</g>\n";
  }
  os << "</svg>\n";
}

void write_line(std::ostream& os, const std::string& title, const std::vector<std::string>& x_labels,
                const std::vector<LineSeries>& series, const std::vector<HLine>& hlines) {
  if (series.empty() || x_labels.empty()) throw UsageError("line plot: empty table");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series) {
    if (s.y.size() != x_labels.size()) throw UsageError("line plot: series '" + s.label + "' length mismatch");
    for (double v : s.y)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  }
  for (const auto& h : hlines) {
    lo = std::min(lo, h.y);
    hi = std::max(hi, h.y);
  }
  if (!std::isfinite(lo)) throw UsageError("line plot: no finite values");
  const auto y = make_scale(lo, hi);
  header(os, title);
  axes(os, y);
  const double n = static_cast<double>(x_labels.size());
  auto x = [&](std::size_t i) { return kLeft + (kWidth - kLeft - kRight) * (static_cast<double>(i) + 0.5) / n; };
  const std::size_t stride = std::max<std::size_t>(1, x_labels.size() / 30);
  for (std::size_t i = 0; i < x_labels.size(); i += stride) x_label(os, x(i), x_labels[i]);
  for (const auto& h : hlines) {
    os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y(h.y)) << "\" x2=\"" << num(kWidth - kRight)
       << "\" y2=\"" << num(y(h.y)) << "\" stroke=\"#555555\" stroke-dasharray=\"4 3\"/>\n";
    os << "<text x=\"" << num(kWidth - kRight) << "\" y=\"" << num(y(h.y) - 3) << "\" text-anchor=\"end\">"
       << escape(h.label) << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* colour = kPalette[k % std::size(kPalette)];
    std::string d;
    bool pen = false;
    for (std::size_t i = 0; i < series[k].y.size(); ++i) {
      const double v = series[k].y[i];
      if (!std::isfinite(v)) {
        pen = false;
        continue;
      }
      d += (pen ? " L" : (d.empty() ? "M" : " M")) + num(x(i)) + ' ' + num(y(v));
      pen = true;
    }
    if (!d.empty())
      os << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\"/>\n";
    os << "<text x=\"" << num(kLeft + 8) << "\" y=\"" << num(kTop + 14 * (static_cast<double>(k) + 1)) << "\" fill=\""
       << colour << "\">" << escape(series[k].label) << "</text>\n";
  }
  os << "</svg>\n";
}

void write_heatmap(std::ostream& os, const std::string& title, const Eigen::MatrixXd& m, double lo, double hi) {
  if (m.size() == 0) throw UsageError("heatmap: empty matrix");
  if (!(hi > lo)) throw UsageError("heatmap: empty value range");
  const double side = 600.0;
  const double cell = side / static_cast<double>(std::max(m.rows(), m.cols()));
  const double w = 2 * 40 + cell * static_cast<double>(m.cols()) + 80;
  const double h = 40 + cell * static_cast<double>(m.rows()) + 40;
  header(os, title, w, h);
  os << "<g shape-rendering=\"crispEdges\">\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      os << "<rect x=\"" << num(40 + cell * static_cast<double>(j)) << "\" y=\""
         << num(40 + cell * static_cast<double>(i)) << "\" width=\"" << num(cell) << "\" height=\"" << num(cell)
         << "\" fill=\"" << heat_color(m(i, j), lo, hi) << "\"/>\n";
  os << "</g>\n";
  const double lx = 40 + cell * static_cast<double>(m.cols()) + 30;
  for (int t = 0; t <= 10; ++t) {
    const double v = hi - (hi - lo) * t / 10.0;
    os << "<rect x=\"" << num(lx) << "\" y=\"" << num(40 + 20.0 * t) << "\" width=\"14\" height=\"20\" fill=\""
       << heat_color(v, lo, hi) << "\"/><text x=\"" << num(lx + 18) << "\" y=\"" << num(54 + 20.0 * t) << "\">"
       << label_num(v) << "</text>\n";
  }
  os << "</svg>\n";
}

void write_histogram(std::ostream& os, const std::string& title, const std::map<double, std::size_t>& counts) {
  if (counts.empty()) throw UsageError("histogram: empty table");
  std::size_t top = 0;
  for (const auto& [k, c] : counts) top = std::max(top, c);
  const YScale y{0.0, static_cast<double>(top) * 1.05};
  header(os, title);
  axes(os, y);
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(counts.size());
  std::size_t k = 0;
  for (const auto& [key, c] : counts) {
    const double x0 = kLeft + slot * static_cast<double>(k);
    os << "<rect x=\"" << num(x0 + 0.1 * slot) << "\" y=\"" << num(y(static_cast<double>(c))) << "\" width=\""
       << num(0.8 * slot) << "\" height=\"" << num(y(0.0) - y(static_cast<double>(c))) << "\" fill=\"#6baed6\"/>\n";
    x_label(os, x0 + 0.5 * slot, label_num(key));
    ++k;
  }
  os << "</svg>\n";
}

Eigen::MatrixXd compose_triangles(const Eigen::MatrixXd& upper, const Eigen::MatrixXd& lower) {
  if (upper.rows() != lower.rows() || upper.cols() != lower.cols() || upper.rows() != upper.cols())
    throw UsageError("compose_triangles: shapes differ");
  Eigen::MatrixXd out = upper;
  out.triangularView<Eigen::StrictlyLower>() = lower.triangularView<Eigen::StrictlyLower>();
  return out;
}

}  // namespace dtrkit::svg
