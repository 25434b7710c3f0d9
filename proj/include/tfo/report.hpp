// Hand-written SVG figures rendered from the CSV artifacts of the pipeline.
#pragma once

#include <string>
#include <vector>

#include "tfo/csv.hpp"

namespace tfo::report {

/// Love plot from balance.csv: raw and weighted |SMD| per covariate with a
/// guide line at `threshold`.
std::string love_plot_svg(const csv::Table& balance, double threshold = 0.05);
/// Grouped propensity histograms from overlap.csv.
std::string overlap_svg(const csv::Table& overlap);
/// TOC curve with its bootstrap band from toc.csv.
std::string toc_svg(const csv::Table& toc);
/// Interval ladder from lambda_sweep.csv.
std::string lambda_svg(const csv::Table& sweep);
/// Estimates with intervals per window, one panel per attempt cutoff, from
/// cutoff_sweep.csv.
std::string cutoff_svg(const csv::Table& sweep);

/// Renders every figure whose input exists in `dir`; returns the written paths.
std::vector<std::string> render_directory(const std::string& dir);

}  // namespace tfo::report
