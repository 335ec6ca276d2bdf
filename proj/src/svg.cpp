#include "bexp/svg.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

namespace bexp {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 420;
constexpr int kMargin = 56;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::ofstream open_svg(const std::string& path, const std::string& title) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open \"" + path + "\" for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  return out;
}

void draw_axes(std::ofstream& out) {
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin
      << "\" x2=\"" << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\""
      << kMargin << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
}

}  // namespace

void write_histogram_svg(const std::string& path, const std::string& title,
                         const std::vector<std::pair<std::string, Histogram>>& series) {
  std::ofstream out = open_svg(path, title);
  draw_axes(out);

  double max_edge = 1e-12;
  double max_density = 1e-12;
  for (const auto& [label, h] : series) {
    max_edge = std::max(max_edge, h.edges[h.edges.size() - 1]);
    std::int64_t total = 0;
    for (std::int64_t c : h.counts) total += c;
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const double width = h.edges[static_cast<Index>(i) + 1] - h.edges[static_cast<Index>(i)];
      if (width > 0.0 && total > 0)
        max_density = std::max(
            max_density, static_cast<double>(h.counts[i]) / (width * total));
    }
  }

  const double plot_w = kWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  auto sx = [&](double x) { return kMargin + x / max_edge * plot_w; };
  auto sy = [&](double d) { return kHeight - kMargin - d / max_density * plot_h; };

  int color = 0;
  int legend_y = kMargin;
  for (const auto& [label, h] : series) {
    std::int64_t total = 0;
    for (std::int64_t c : h.counts) total += c;
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[color % 8]
        << "\" stroke-width=\"1.5\" points=\"";
    out << std::fixed << std::setprecision(1);
    out << sx(h.edges[0]) << ',' << sy(0.0) << ' ';
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const Index idx = static_cast<Index>(i);
      const double width = h.edges[idx + 1] - h.edges[idx];
      const double density =
          (width > 0.0 && total > 0)
              ? static_cast<double>(h.counts[i]) / (width * total)
              : 0.0;
      out << sx(h.edges[idx]) << ',' << sy(density) << ' ' << sx(h.edges[idx + 1])
          << ',' << sy(density) << ' ';
    }
    out << sx(h.edges[h.edges.size() - 1]) << ',' << sy(0.0) << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin - 150 << "\" y=\"" << legend_y
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
        << kPalette[color % 8] << "\">" << label << "</text>\n";
    legend_y += 16;
    ++color;
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">simple regret</text>\n</svg>\n";
}

void write_bar_svg(const std::string& path, const std::string& title,
                   const std::vector<std::string>& labels,
                   const std::vector<double>& values) {
  std::ofstream out = open_svg(path, title);
  const double plot_w = kWidth - 2 * kMargin - 120;
  const double row_h =
      (kHeight - 2.0 * kMargin) / std::max<std::size_t>(1, labels.size());
  double max_val = 1e-12;
  for (double v : values) max_val = std::max(max_val, v);

  out << std::fixed << std::setprecision(1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = kMargin + row_h * i;
    const double w = values[i] / max_val * plot_w;
    out << "<rect x=\"" << kMargin + 120 << "\" y=\"" << y + 4 << "\" width=\""
        << w << "\" height=\"" << row_h - 8 << "\" fill=\""
        << kPalette[i % 8] << "\"/>\n"
        << "<text x=\"" << kMargin + 112 << "\" y=\"" << y + row_h / 2 + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\">" << labels[i] << "</text>\n"
        << "<text x=\"" << kMargin + 126 + w << "\" y=\"" << y + row_h / 2 + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << std::setprecision(1) << values[i] << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace bexp
