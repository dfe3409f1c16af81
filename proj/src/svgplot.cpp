#include "sclab/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "sclab/serialize.hpp"

namespace sclab {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 610.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 370.0;

const char* kPalette[6] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

const char* kPartitionFill[kNumPartitions] = {
    "#2ca02c",  // correct_easy
    "#98df8a",  // correct_hard
    "#d62728",  // incorrect_easy
    "#ff9896",  // incorrect_hard
};

std::ofstream open_svg(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return out;
}

double map_x(double v, double lo, double hi) {
  return kLeft + (v - lo) / (hi - lo) * (kRight - kLeft);
}

double map_y(double v, double lo, double hi) {
  return kBottom - (v - lo) / (hi - lo) * (kBottom - kTop);
}

std::string num(double v) { return fmt_double(std::round(v * 100.0) / 100.0); }

void draw_axes(std::ofstream& out, double x_lo, double x_hi, double y_lo, double y_hi,
               const std::string& x_label, const std::string& y_label) {
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight << "\" y2=\""
      << kBottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kBottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = x_lo + (x_hi - x_lo) * i / 5.0;
    const double px = map_x(fx, x_lo, x_hi);
    out << "<line x1=\"" << num(px) << "\" y1=\"" << kBottom << "\" x2=\"" << num(px)
        << "\" y2=\"" << kBottom + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(px) << "\" y=\"" << kBottom + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << num(fx) << "</text>\n";
    const double fy = y_lo + (y_hi - y_lo) * i / 5.0;
    const double py = map_y(fy, y_lo, y_hi);
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(py) << "\" x2=\"" << kLeft
        << "\" y2=\"" << num(py) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << num(fy) << "</text>\n";
  }
  out << "<text x=\"" << num((kLeft + kRight) / 2) << "\" y=\"" << kBottom + 36
      << "\" font-size=\"13\" text-anchor=\"middle\">" << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << num((kTop + kBottom) / 2)
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num((kTop + kBottom) / 2) << ")\">" << y_label << "</text>\n";
}

}  // namespace

void write_focal_curves_svg(const std::filesystem::path& path,
                            const std::vector<double>& gammas) {
  if (gammas.empty()) throw std::invalid_argument("write_focal_curves_svg: no gammas");
  std::ofstream out = open_svg(path);
  const double y_max = 5.0;
  out << "<title>loss vs ground-truth probability</title>\n";
  draw_axes(out, 0.0, 1.0, 0.0, y_max, "probability of ground-truth class", "loss");
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    LossSpec spec;
    spec.kind = LossKind::Focal;
    spec.gamma = gammas[gi];
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[gi % 6]
        << "\" stroke-width=\"1.5\" points=\"";
    bool started = false;
    for (int i = 1; i <= 199; ++i) {
      const double p = i / 200.0;
      const double v =
          focal_value(ProbVector{{p, (1.0 - p) / 2.0, (1.0 - p) / 2.0}}, 0, spec);
      if (v > y_max) continue;  // clip the blow-up near p = 0
      out << num(map_x(p, 0.0, 1.0)) << ',' << num(map_y(v, 0.0, y_max)) << ' ';
      started = true;
    }
    if (!started) out << num(kLeft) << ',' << num(kBottom) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << kRight - 120 << "\" y=\"" << kTop + 16 + 16 * gi
        << "\" font-size=\"12\" fill=\"" << kPalette[gi % 6] << "\">gamma = "
        << fmt_double(gammas[gi]) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_histogram_svg(const std::filesystem::path& path, const Histogram& hist,
                         const std::string& title, const std::string& x_label) {
  const int n_bins = hist.bins();
  if (n_bins < 1) throw std::invalid_argument("write_histogram_svg: empty histogram");
  std::ofstream out = open_svg(path);
  out << "<title>" << title << "</title>\n";
  out << "<desc>";
  for (int p = 0; p < kNumPartitions; ++p) {
    long t = 0;
    for (long c : hist.counts[p]) t += c;
    out << partition_name(p) << '=' << t << (p + 1 < kNumPartitions ? " " : "");
  }
  out << "</desc>\n";

  long max_stack = 1;
  for (int b = 0; b < n_bins; ++b) {
    long stack = 0;
    for (int p = 0; p < kNumPartitions; ++p) stack += hist.counts[p][b];
    max_stack = std::max(max_stack, stack);
  }
  draw_axes(out, hist.lo, hist.hi, 0.0, static_cast<double>(max_stack), x_label, "count");

  const double bin_w = (kRight - kLeft) / static_cast<double>(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    double y = kBottom;
    for (int p = 0; p < kNumPartitions; ++p) {
      const long c = hist.counts[p][b];
      if (c == 0) continue;
      const double h =
          static_cast<double>(c) / static_cast<double>(max_stack) * (kBottom - kTop);
      y -= h;
      out << "<rect x=\"" << num(kLeft + b * bin_w) << "\" y=\"" << num(y) << "\" width=\""
          << num(bin_w) << "\" height=\"" << num(h) << "\" fill=\"" << kPartitionFill[p]
          << "\"/>\n";
    }
  }

  // Reference markers: uniform-guess loss (blue) and the guaranteed-correct
  // p = 0.5 line (red).
  const double markers[2] = {hist.marker_guess, hist.marker_majority};
  const char* marker_color[2] = {"#0000cc", "#cc0000"};
  for (int m = 0; m < 2; ++m) {
    if (markers[m] < hist.lo || markers[m] > hist.hi) continue;
    const double px = map_x(markers[m], hist.lo, hist.hi);
    out << "<line x1=\"" << num(px) << "\" y1=\"" << kTop << "\" x2=\"" << num(px)
        << "\" y2=\"" << kBottom << "\" stroke=\"" << marker_color[m]
        << "\" stroke-dasharray=\"4 3\"/>\n";
  }

  for (int p = 0; p < kNumPartitions; ++p) {
    const double ly = kTop + 16.0 * p;
    out << "<rect x=\"" << kRight - 130 << "\" y=\"" << num(ly) << "\" width=\"10\" height=\"10\" fill=\""
        << kPartitionFill[p] << "\"/>\n";
    out << "<text x=\"" << kRight - 116 << "\" y=\"" << num(ly + 9) << "\" font-size=\"11\">"
        << partition_name(p) << "</text>\n";
  }
  out << "<text x=\"" << num((kLeft + kRight) / 2) << "\" y=\"" << kTop - 14
      << "\" font-size=\"14\" text-anchor=\"middle\">" << title << "</text>\n";
  out << "</svg>\n";
}

}  // namespace sclab
