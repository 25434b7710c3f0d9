#include "tfo/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "tfo/common.hpp"

namespace tfo::report {

namespace {

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << std::fixed << v;
  std::string out = s.str();
  while (out.size() > 1 && out.back() == '0') out.pop_back();
  if (out.back() == '.') out.pop_back();
  return out;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

class Svg {
 public:
  Svg(int width, int height) : width_(width), height_(height) {}

  void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width = 1,
            const std::string& dash = {}) {
    body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\"" << num(y2)
          << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"";
    if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
    body_ << "/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill, double opacity = 1) {
    body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(std::max(w, 0.0))
          << "\" height=\"" << num(std::max(h, 0.0)) << "\" fill=\"" << fill << "\" fill-opacity=\"" << num(opacity)
          << "\"/>\n";
  }
  void circle(double x, double y, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\"" << fill
          << "\"/>\n";
  }
  void text(double x, double y, const std::string& t, int size = 11, const std::string& anchor = "start") {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << xml_escape(t) << "</text>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double width = 1.5) {
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << num(x) << "," << num(y) << " ";
    body_ << "\"/>\n";
  }
  void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill, double opacity) {
    body_ << "<polygon fill=\"" << fill << "\" fill-opacity=\"" << num(opacity) << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << num(x) << "," << num(y) << " ";
    body_ << "\"/>\n";
  }
  std::string str() const {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\"" << height_
      << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body_.str() << "</svg>\n";
    return s.str();
  }

 private:
  int width_, height_;
  std::ostringstream body_;
};

/// Maps [lo, hi] onto [a, b].
struct Scale {
  double lo, hi, a, b;
  double operator()(double v) const { return hi == lo ? 0.5 * (a + b) : a + (v - lo) / (hi - lo) * (b - a); }
};

std::pair<double, double> padded(double lo, double hi) {
  if (!(hi > lo)) return {lo - 1, hi + 1};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

void x_axis(Svg& svg, const Scale& x, double y, int ticks, const std::string& label) {
  svg.line(x.a, y, x.b, y, "black");
  for (int k = 0; k <= ticks; ++k) {
    const double v = x.lo + (x.hi - x.lo) * k / ticks;
    svg.line(x(v), y, x(v), y + 4, "black");
    svg.text(x(v), y + 16, num(v), 10, "middle");
  }
  svg.text(0.5 * (x.a + x.b), y + 32, label, 12, "middle");
}

void y_axis(Svg& svg, const Scale& y, double x, int ticks, const std::string& label) {
  svg.line(x, y.a, x, y.b, "black");
  for (int k = 0; k <= ticks; ++k) {
    const double v = y.lo + (y.hi - y.lo) * k / ticks;
    svg.line(x - 4, y(v), x, y(v), "black");
    svg.text(x - 6, y(v) + 3, num(v), 10, "end");
  }
  svg.text(x - 44, 0.5 * (y.a + y.b), label, 12, "middle");
}

double cell(const csv::Table& t, std::size_t r, const std::string& c) {
  const auto& s = t.at(r, c);
  return csv::is_missing(s) ? NAN : t.number(r, c);
}

}  // namespace

std::string love_plot_svg(const csv::Table& balance, double threshold) {
  csv::require_columns(balance, {"covariate", "raw_smd", "weighted_smd"}, "balance.csv");
  const std::size_t n = balance.size();
  const int row_h = 24, left = 150, width = 560;
  const int height = int(n) * row_h + 90;
  double hi = threshold;
  for (std::size_t r = 0; r < n; ++r)
    hi = std::max({hi, std::abs(cell(balance, r, "raw_smd")), std::abs(cell(balance, r, "weighted_smd"))});
  Svg svg(width, height);
  const Scale x{0, hi * 1.1, double(left), double(width - 30)};
  svg.text(width / 2.0, 18, "Covariate balance (|SMD|)", 13, "middle");
  for (std::size_t r = 0; r < n; ++r) {
    const double y = 40 + double(r) * row_h;
    svg.text(left - 8, y + 4, balance.at(r, "covariate"), 11, "end");
    svg.line(x.a, y, x.b, y, "#dddddd");
    svg.circle(x(std::abs(cell(balance, r, "raw_smd"))), y, 4, "#d62728");
    svg.circle(x(std::abs(cell(balance, r, "weighted_smd"))), y, 4, "#1f77b4");
  }
  const double base = 40 + double(n) * row_h;
  svg.line(x(threshold), 30, x(threshold), base - row_h / 2.0, "black", 1, "4,3");
  x_axis(svg, x, base, 4, "absolute standardized mean difference");
  svg.circle(left, height - 10, 4, "#d62728");
  svg.text(left + 8, height - 6, "unweighted", 10);
  svg.circle(left + 90, height - 10, 4, "#1f77b4");
  svg.text(left + 98, height - 6, "weighted", 10);
  return svg.str();
}

std::string overlap_svg(const csv::Table& overlap) {
  csv::require_columns(overlap, {"bin_lo", "bin_hi", "count_nonattempt", "count_attempt"}, "overlap.csv");
  const int width = 560, height = 360, left = 70, top = 40, bottom = height - 60;
  double lo = INFINITY, hi = -INFINITY, total0 = 0, total1 = 0;
  for (std::size_t r = 0; r < overlap.size(); ++r) {
    lo = std::min(lo, cell(overlap, r, "bin_lo"));
    hi = std::max(hi, cell(overlap, r, "bin_hi"));
    total0 += cell(overlap, r, "count_nonattempt");
    total1 += cell(overlap, r, "count_attempt");
  }
  // Densities so the two groups are comparable despite different sizes.
  double peak = 0;
  std::vector<std::pair<double, double>> dens;
  for (std::size_t r = 0; r < overlap.size(); ++r) {
    const double w = cell(overlap, r, "bin_hi") - cell(overlap, r, "bin_lo");
    const double d0 = total0 > 0 && w > 0 ? cell(overlap, r, "count_nonattempt") / total0 / w : 0;
    const double d1 = total1 > 0 && w > 0 ? cell(overlap, r, "count_attempt") / total1 / w : 0;
    dens.emplace_back(d0, d1);
    peak = std::max({peak, d0, d1});
  }
  Svg svg(width, height);
  svg.text(width / 2.0, 20, "Estimated propensity by group", 13, "middle");
  const Scale x{lo, hi, double(left), double(width - 20)};
  const Scale y{0, peak > 0 ? peak * 1.1 : 1, double(bottom), double(top)};
  for (std::size_t r = 0; r < overlap.size(); ++r) {
    const double x0 = x(cell(overlap, r, "bin_lo")), x1 = x(cell(overlap, r, "bin_hi"));
    svg.rect(x0, y(dens[r].first), x1 - x0, bottom - y(dens[r].first), "#d62728", 0.45);
    svg.rect(x0, y(dens[r].second), x1 - x0, bottom - y(dens[r].second), "#1f77b4", 0.45);
  }
  x_axis(svg, x, bottom, 5, "propensity score");
  y_axis(svg, y, left, 4, "density");
  svg.rect(width - 150, top, 10, 10, "#d62728", 0.45);
  svg.text(width - 135, top + 9, "non-attempt", 10);
  svg.rect(width - 150, top + 16, 10, 10, "#1f77b4", 0.45);
  svg.text(width - 135, top + 25, "attempt", 10);
  return svg.str();
}

std::string toc_svg(const csv::Table& toc) {
  csv::require_columns(toc, {"q", "toc", "band_lo", "band_hi"}, "toc.csv");
  const int width = 560, height = 360, left = 70, top = 40, bottom = height - 60;
  double lo = 0, hi = 0;
  for (std::size_t r = 0; r < toc.size(); ++r) {
    lo = std::min({lo, cell(toc, r, "band_lo"), cell(toc, r, "toc")});
    hi = std::max({hi, cell(toc, r, "band_hi"), cell(toc, r, "toc")});
  }
  const auto [ylo, yhi] = padded(lo, hi);
  Svg svg(width, height);
  svg.text(width / 2.0, 20, "Targeting operator characteristic", 13, "middle");
  const Scale x{0, 1, double(left), double(width - 20)};
  const Scale y{ylo, yhi, double(bottom), double(top)};
  std::vector<std::pair<double, double>> band, curve;
  for (std::size_t r = 0; r < toc.size(); ++r) band.emplace_back(x(cell(toc, r, "q")), y(cell(toc, r, "band_hi")));
  for (std::size_t r = toc.size(); r-- > 0;) band.emplace_back(x(cell(toc, r, "q")), y(cell(toc, r, "band_lo")));
  for (std::size_t r = 0; r < toc.size(); ++r) curve.emplace_back(x(cell(toc, r, "q")), y(cell(toc, r, "toc")));
  svg.polygon(band, "#1f77b4", 0.2);
  svg.line(x.a, y(0), x.b, y(0), "#888888", 1, "4,3");
  svg.polyline(curve, "#1f77b4");
  x_axis(svg, x, bottom, 5, "treated fraction q");
  y_axis(svg, y, left, 4, "TOC");
  return svg.str();
}

std::string lambda_svg(const csv::Table& sweep) {
  csv::require_columns(sweep, {"lambda", "lo", "hi"}, "lambda_sweep.csv");
  const int width = 560, height = 360, left = 70, top = 40, bottom = height - 60;
  double lmin = INFINITY, lmax = -INFINITY, lo = 0, hi = 0;
  for (std::size_t r = 0; r < sweep.size(); ++r) {
    lmin = std::min(lmin, cell(sweep, r, "lambda"));
    lmax = std::max(lmax, cell(sweep, r, "lambda"));
    lo = std::min(lo, cell(sweep, r, "lo"));
    hi = std::max(hi, cell(sweep, r, "hi"));
  }
  const auto [xlo, xhi] = padded(lmin, lmax);
  const auto [ylo, yhi] = padded(lo, hi);
  Svg svg(width, height);
  svg.text(width / 2.0, 20, "Sensitivity intervals by Lambda", 13, "middle");
  const Scale x{xlo, xhi, double(left), double(width - 20)};
  const Scale y{ylo, yhi, double(bottom), double(top)};
  svg.line(x.a, y(0), x.b, y(0), "#888888", 1, "4,3");
  for (std::size_t r = 0; r < sweep.size(); ++r) {
    const double xv = x(cell(sweep, r, "lambda"));
    const bool sig = cell(sweep, r, "lo") > 0 || cell(sweep, r, "hi") < 0;
    const std::string color = sig ? "#1f77b4" : "#d62728";
    svg.line(xv, y(cell(sweep, r, "lo")), xv, y(cell(sweep, r, "hi")), color, 3);
  }
  x_axis(svg, x, bottom, 5, "Lambda");
  y_axis(svg, y, left, 4, "effect bounds (points)");
  return svg.str();
}

std::string cutoff_svg(const csv::Table& sweep) {
  csv::require_columns(sweep, {"upper", "lower", "cutoff", "estimate", "lo", "hi"}, "cutoff_sweep.csv");
  std::map<int, std::vector<std::size_t>> panels;
  double lo = 0, hi = 0;
  for (std::size_t r = 0; r < sweep.size(); ++r) {
    if (std::isnan(cell(sweep, r, "estimate"))) continue;
    panels[int(sweep.integer(r, "cutoff"))].push_back(r);
    lo = std::min(lo, cell(sweep, r, "lo"));
    hi = std::max(hi, cell(sweep, r, "hi"));
  }
  const auto [ylo, yhi] = padded(lo, hi);
  const int panel_w = 240, height = 360, left = 70, top = 50, bottom = height - 80;
  const int width = left + panel_w * std::max<int>(1, int(panels.size())) + 20;
  Svg svg(width, height);
  svg.text(width / 2.0, 20, "ATE across timing definitions", 13, "middle");
  const Scale y{ylo, yhi, double(bottom), double(top)};
  y_axis(svg, y, left, 4, "AIPW estimate");
  int p = 0;
  for (const auto& [cutoff, rows] : panels) {
    const double x0 = left + p * panel_w + 10, x1 = x0 + panel_w - 20;
    svg.text(0.5 * (x0 + x1), top - 12, "attempt cutoff " + std::to_string(cutoff) + "s", 11, "middle");
    svg.line(x0, y(0), x1, y(0), "#888888", 1, "4,3");
    svg.line(x0, bottom, x1, bottom, "black");
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const std::size_t r = rows[k];
      const double xv = x0 + (x1 - x0) * (double(k) + 0.5) / double(rows.size());
      const bool is_default = sweep.integer(r, "upper") == 43 && sweep.integer(r, "lower") == 35 && cutoff == 28;
      const std::string color = is_default ? "#d62728" : "#1f77b4";
      svg.line(xv, y(cell(sweep, r, "lo")), xv, y(cell(sweep, r, "hi")), color, 1.5);
      svg.circle(xv, y(cell(sweep, r, "estimate")), 3.5, color);
      svg.text(xv, bottom + 14, sweep.at(r, "upper") + "-" + sweep.at(r, "lower"), 9, "middle");
    }
    ++p;
  }
  svg.text(width / 2.0, height - 30, "opportunity window (upper-lower seconds)", 12, "middle");
  return svg.str();
}

std::vector<std::string> render_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  struct Figure {
    const char* input;
    const char* output;
    std::string (*render)(const csv::Table&);
  };
  static const Figure figures[] = {
      {"balance.csv", "love_plot.svg", [](const csv::Table& t) { return love_plot_svg(t); }},
      {"overlap.csv", "propensity.svg", overlap_svg},
      {"toc.csv", "toc.svg", toc_svg},
      {"lambda_sweep.csv", "lambda_sweep.svg", lambda_svg},
      {"cutoff_sweep.csv", "cutoff_sweep.svg", cutoff_svg},
  };
  std::vector<std::string> written;
  for (const auto& f : figures) {
    const fs::path in = fs::path(dir) / f.input;
    if (!fs::exists(in)) continue;
    const fs::path out = fs::path(dir) / f.output;
    std::ofstream os(out);
    if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write " + out.string());
    os << f.render(csv::read_file(in.string()));
    written.push_back(out.string());
  }
  return written;
}

}  // namespace tfo::report
