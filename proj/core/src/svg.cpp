#include "msdelay/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace msdelay {

namespace {

constexpr const char* kPalette[] = {"#4c9f70", "#f2b134", "#d9534f", "#6f42c1", "#17a2b8", "#6c757d"};

std::string escape(std::string_view s) {
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

}  // namespace

std::string stacked_probability_svg(std::span<const StackedRow> rows,
                                    const std::vector<std::string>& labels, double horizon) {
  const double pw = 220.0, ph = 140.0, gap = 30.0, left = 60.0, top = 40.0;
  const auto n = labels.size();
  const double width = left + static_cast<double>(n) * (pw + gap);
  const double height = top + static_cast<double>(rows.size()) * (ph + gap) + 40.0;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n",
      width, height);
  for (std::size_t c = 0; c < n; ++c) {
    out += fmt::format("<text x=\"{:.1f}\" y=\"20\" text-anchor=\"middle\">from {}</text>\n",
                       left + static_cast<double>(c) * (pw + gap) + pw / 2, escape(labels[c]));
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double y0 = top + static_cast<double>(r) * (ph + gap);
    out += fmt::format("<text x=\"5\" y=\"{:.1f}\">{}</text>\n", y0 + ph / 2, escape(rows[r].title));
    const auto& path = rows[r].path;
    for (std::size_t from = 0; from < n; ++from) {
      const double x0 = left + static_cast<double>(from) * (pw + gap);
      const auto x = [&](double u) { return x0 + pw * std::min(u, horizon) / horizon; };
      // Step function: P(0,u) holds from one jump to the next.
      for (std::size_t k = 0; k < path.size(); ++k) {
        const double u0 = path[k].t();
        const double u1 = k + 1 < path.size() ? path[k + 1].t() : horizon;
        if (u0 >= horizon || u1 <= u0) continue;
        double cum = 0.0;
        for (std::size_t to = 0; to < n; ++to) {
          const double p = path[k](static_cast<State>(from), static_cast<State>(to));
          if (p > 0.0) {
            out += fmt::format(
                "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                x(u0), y0 + ph * cum, x(u1) - x(u0), ph * p, kPalette[to % 6]);
          }
          cum += p;
        }
      }
      out += fmt::format(
          "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" "
          "stroke=\"#333\"/>\n",
          x0, y0, pw, ph);
    }
  }
  const double ly = height - 20.0;
  for (std::size_t s = 0; s < n; ++s) {
    const double lx = left + static_cast<double>(s) * 140.0;
    out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"12\" height=\"12\" fill=\"{}\"/>"
                       "<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n",
                       lx, ly - 10, kPalette[s % 6], lx + 16, ly, escape(labels[s]));
  }
  out += "</svg>\n";
  return out;
}

std::string forest_plot_svg(std::span<const HazardRatioRow> rows, const std::string& title) {
  const double left = 220.0, pw = 360.0, row_h = 18.0, top = 40.0;
  double lo = 1.0, hi = 1.0;
  for (const auto& r : rows) {
    if (std::isfinite(r.ci_low) && r.ci_low > 0.0) lo = std::min(lo, r.ci_low);
    if (std::isfinite(r.ci_high)) hi = std::max(hi, r.ci_high);
  }
  const double a = std::log(lo) - 0.1, b = std::log(hi) + 0.1;
  const auto x = [&](double v) { return left + pw * (std::log(v) - a) / (b - a); };
  const double height = top + row_h * static_cast<double>(rows.size()) + 40.0;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n<text x=\"10\" y=\"20\">{}</text>\n",
      left + pw + 40.0, height, escape(title));
  out += fmt::format("<line x1=\"{0:.2f}\" x2=\"{0:.2f}\" y1=\"{1:.1f}\" y2=\"{2:.1f}\" "
                     "stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
                     x(1.0), top - 10, height - 30);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double y = top + row_h * static_cast<double>(i);
    out += fmt::format("<text x=\"10\" y=\"{:.1f}\">d{} {} {}</text>\n", y + 4,
                       static_cast<int>(r.direction), r.transition.label(), escape(r.covariate));
    if (!std::isfinite(r.ci_low) || !std::isfinite(r.ci_high) || !(r.hr > 0.0)) continue;
    const auto colour = r.ci_low > 1.0 ? "#d9534f" : (r.ci_high < 1.0 ? "#337ab7" : "#555");
    out += fmt::format("<line x1=\"{:.2f}\" x2=\"{:.2f}\" y1=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"{}\"/>"
                       "<circle cx=\"{:.2f}\" cy=\"{:.1f}\" r=\"3\" fill=\"{}\"/>\n",
                       x(r.ci_low), x(r.ci_high), y, y, colour, x(r.hr), y, colour);
  }
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.1f}\" text-anchor=\"middle\">HR (log scale)</text>\n",
                     left + pw / 2, height - 10);
  out += "</svg>\n";
  return out;
}

}  // namespace msdelay
