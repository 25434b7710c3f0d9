// Command-line driver: one subcommand per pipeline stage, each reading and
// writing documented CSV/JSON artifacts.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tfo/ate.hpp"
#include "tfo/forest.hpp"
#include "tfo/label.hpp"

namespace tfo::cli {

/// Exit codes.
enum Exit : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

/// Every tunable default. Loaded from a JSON config, then overridden by flags.
///
/// Config schema (all keys optional):
///   seed: integer
///   cutoffs: [upper, lower, attempt]
///   clip_eps: number
///   spline_df: integer
///   propensity_link: "probit" | "logit"
///   forest: {n_trees, subsample_fraction, honesty_fraction, min_node_size, mtry}
///   bootstrap: {rate, sensitivity}
///   lambdas: [number, ...]
///   keep_mass: number
struct Settings {
  std::uint64_t seed = 42;
  label::TfoDefinition definition;
  ate::PipelineConfig pipeline;
  forest::ForestConfig forest;
  int rate_bootstrap = 200;
  int sensitivity_bootstrap = 1000;
  std::vector<double> lambdas;
  double keep_mass = 0.95;

  /// Applies the keys present in `config`; unknown keys are a usage error.
  void apply(const nlohmann::json& config);
};

/// Parses "U,L,A" into a definition; throws Usage on malformed input.
label::TfoDefinition parse_cutoffs(const std::string& text);

/// Runs the CLI with argv-style arguments (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tfo::cli
