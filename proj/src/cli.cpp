#include "tfo/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "tfo/csv.hpp"
#include "tfo/dataset.hpp"
#include "tfo/pbp.hpp"
#include "tfo/rate.hpp"
#include "tfo/report.hpp"
#include "tfo/sensitivity.hpp"
#include "tfo/synth.hpp"

namespace tfo::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Usage, "config " + where + key + ": " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::Usage, "config " + where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw Error(ErrorCode::Usage, "unknown config key " + where + key);
}

}  // namespace

void Settings::apply(const json& config) {
  reject_unknown(config,
                 {"seed", "cutoffs", "clip_eps", "spline_df", "propensity_link", "forest", "bootstrap", "lambdas",
                  "keep_mass"},
                 "");
  if (config.contains("seed")) seed = get<std::uint64_t>(config, "seed", "");
  if (config.contains("cutoffs")) {
    const auto v = get<std::vector<int>>(config, "cutoffs", "");
    if (v.size() != 3) throw Error(ErrorCode::Usage, "config cutoffs must be [upper, lower, attempt]");
    definition = {v[0], v[1], v[2]};
  }
  if (config.contains("clip_eps")) pipeline.clip = forest.clip = get<double>(config, "clip_eps", "");
  if (config.contains("spline_df")) pipeline.spline_df = get<int>(config, "spline_df", "");
  if (config.contains("propensity_link")) {
    const auto link = get<std::string>(config, "propensity_link", "");
    if (link == "probit") pipeline.propensity_link = glm::Link::Probit;
    else if (link == "logit") pipeline.propensity_link = glm::Link::Logit;
    else throw Error(ErrorCode::Usage, "config propensity_link must be probit or logit");
  }
  if (config.contains("forest")) {
    const json& f = config["forest"];
    reject_unknown(f, {"n_trees", "subsample_fraction", "honesty_fraction", "min_node_size", "mtry"}, "forest.");
    if (f.contains("n_trees")) forest.n_trees = get<int>(f, "n_trees", "forest.");
    if (f.contains("subsample_fraction")) forest.subsample_fraction = get<double>(f, "subsample_fraction", "forest.");
    if (f.contains("honesty_fraction")) forest.honesty_fraction = get<double>(f, "honesty_fraction", "forest.");
    if (f.contains("min_node_size")) forest.min_node_size = get<int>(f, "min_node_size", "forest.");
    if (f.contains("mtry")) forest.mtry = get<int>(f, "mtry", "forest.");
  }
  if (config.contains("bootstrap")) {
    const json& b = config["bootstrap"];
    reject_unknown(b, {"rate", "sensitivity"}, "bootstrap.");
    if (b.contains("rate")) rate_bootstrap = get<int>(b, "rate", "bootstrap.");
    if (b.contains("sensitivity")) sensitivity_bootstrap = get<int>(b, "sensitivity", "bootstrap.");
  }
  if (config.contains("lambdas")) lambdas = get<std::vector<double>>(config, "lambdas", "");
  if (config.contains("keep_mass")) keep_mass = get<double>(config, "keep_mass", "");
}

label::TfoDefinition parse_cutoffs(const std::string& text) {
  try {
    return label::parse_definition(text);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Usage) throw;
    throw Error(ErrorCode::Usage, "invalid cutoffs '" + text + "': upper > lower > attempt > 0 required");
  }
}

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  return out;
}

void write_json(const std::string& path, const ordered_json& j) { open_out(path) << j.dump(2) << "\n"; }

json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedCsv, path + ": " + e.what());
  }
}

std::vector<data::CovariateRow> read_analysis(const std::string& path) {
  auto in = open_in(path);
  return data::read_analysis_csv(in, path);
}

/// Covariates offered to the forest before importance filtering.
std::vector<std::string> forest_covariates() {
  std::vector<std::string> names = data::table1_covariates();
  names.push_back("period_2");
  names.push_back("period_3");
  for (const auto& d : data::derived_covariates()) names.push_back(d);
  return names;
}

Vec column_of(const std::vector<data::CovariateRow>& rows, bool treatment) {
  Vec v(Eigen::Index(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) v[Eigen::Index(i)] = treatment ? rows[i].w : rows[i].y;
  return v;
}

struct ForestRun {
  std::vector<forest::Importance> importance;
  std::vector<std::string> kept;
  forest::CausalForestFit fit;
  Vec y, w;
};

/// Fits on every covariate, ranks by importance, then refits on the kept set.
ForestRun run_forest(const std::vector<data::CovariateRow>& rows, const Settings& s) {
  ForestRun r;
  r.y = column_of(rows, false);
  r.w = column_of(rows, true);
  const auto names = forest_covariates();
  auto full = forest::fit_causal_forest(rate::covariate_matrix(rows, names), r.y, r.w, names, s.forest);
  r.importance = forest::variable_importance(full.forest);
  r.kept = forest::filter_variables(r.importance, s.keep_mass);
  if (r.kept.size() == names.size()) {
    r.kept = names;
    r.fit = std::move(full);
  } else {
    r.fit = forest::fit_causal_forest(rate::covariate_matrix(rows, r.kept), r.y, r.w, r.kept, s.forest,
                                      full.nuisances);
  }
  return r;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

void report_issues(const std::vector<Issue>& issues, const std::string& path, std::ostream& err) {
  if (issues.empty()) return;
  auto out = open_out(path);
  csv::write_row(out, {"code", "location", "message"});
  for (const auto& i : issues) csv::write_row(out, {i.code, i.location, i.message});
  err << issues.size() << " issue(s) written to " << path << "\n";
}

struct Inputs {
  std::string pbp, starters, ratings, odds, aliases, observations, analysis, spec, out, stratum = "pooled";
  std::string train_seasons, eval_seasons, rule = "cate", grid, dir;
  std::string season = "2018-19";
  int games = 0;
};

std::vector<pbp::Game> load_games(const Inputs& in, std::vector<Issue>& issues) {
  const auto rows = pbp::read_pbp_csv(in.pbp);
  pbp::StartersTable starters;
  const bool have_starters = !in.starters.empty();
  if (have_starters) starters = pbp::read_starters_csv(in.starters);
  return pbp::ingest(rows, have_starters ? &starters : nullptr, issues);
}

std::vector<label::TfoObservation> label_all(const std::vector<pbp::Game>& games, const label::TfoDefinition& def,
                                             std::vector<Issue>& issues) {
  std::vector<label::TfoObservation> all;
  for (const auto& g : games) {
    auto obs = label::label_game(g.events, def, issues, pbp::season_of(g.game_id));
    all.insert(all.end(), obs.begin(), obs.end());
  }
  return all;
}

struct Tables {
  data::RatingsTable ratings;
  data::OddsTable odds;
  data::Aliases aliases;
};

Tables load_tables(const Inputs& in) {
  Tables t;
  {
    auto f = open_in(in.ratings);
    t.ratings = data::read_ratings_csv(f, in.ratings);
  }
  {
    auto f = open_in(in.odds);
    t.odds = data::read_odds_csv(f, in.odds);
  }
  if (!in.aliases.empty()) {
    auto f = open_in(in.aliases);
    t.aliases = data::read_aliases_csv(f, in.aliases);
  }
  return t;
}

void print_counts(std::ostream& out, const label::LabelCounts& c) {
  out << "attempts: " << c.attempts << "\n"
      << "non_attempts: " << c.non_attempts << "\n"
      << "excluded_turnover: " << c.excluded_turnover << "\n"
      << "excluded_other: " << c.excluded_other << "\n"
      << "excluded_repeat: " << c.excluded_repeat << "\n"
      << "total: " << c.total() << "\n";
}

class Driver {
 public:
  Driver(Settings settings, std::string out_dir, std::ostream& out, std::ostream& err)
      : s_(std::move(settings)), dir_(std::move(out_dir)), out_(out), err_(err) {}

  std::string path(const std::string& name, const std::string& override_path = {}) const {
    if (!override_path.empty()) return override_path;
    return (fs::path(dir_) / name).string();
  }

  void ingest(const Inputs& in) {
    std::vector<Issue> issues;
    const auto games = load_games(in, issues);
    auto f = open_out(path("events.jsonl", in.out));
    std::size_t events = 0;
    for (const auto& g : games) {
      pbp::write_events_jsonl(f, g.events);
      events += g.events.size();
    }
    out_ << "games: " << games.size() << "\nevents: " << events << "\n";
    report_issues(issues, path("issues.csv"), err_);
  }

  void label(const Inputs& in) {
    std::vector<Issue> issues;
    const auto games = load_games(in, issues);
    const auto obs = label_all(games, s_.definition, issues);
    auto f = open_out(path("observations.csv", in.out));
    label::write_observations_csv(f, obs);
    print_counts(out_, label::count(obs));
    report_issues(issues, path("issues.csv"), err_);
  }

  void dataset(const Inputs& in) {
    std::vector<Issue> issues;
    const auto games = load_games(in, issues);
    std::vector<label::TfoObservation> obs;
    if (!in.observations.empty()) {
      auto f = open_in(in.observations);
      obs = label::read_observations_csv(f, in.observations);
      std::map<std::string, const pbp::Game*> by_id;
      for (const auto& g : games) by_id[g.game_id] = &g;
      for (auto& o : obs) {
        const auto it = by_id.find(o.game_id);
        if (it != by_id.end() && !label::relink(o, it->second->events))
          issues.push_back({"UnlinkedObservation", o.game_id + ":" + std::to_string(o.period),
                            "observation does not match any gain event"});
      }
    } else {
      obs = label_all(games, s_.definition, issues);
    }
    const Tables t = load_tables(in);
    auto assembled = data::assemble(obs, games, t.ratings, t.odds, t.aliases);
    auto f = open_out(path("analysis.csv", in.out));
    data::write_analysis_csv(f, assembled.rows);
    const auto summary = data::summarize(assembled.rows);
    for (const auto& [season, c] : summary.by_season)
      out_ << season << ": attempts " << c.attempts << ", non_attempts " << c.non_attempts << "\n";
    out_ << "pooled: attempts " << summary.pooled.attempts << ", non_attempts " << summary.pooled.non_attempts
         << "\n";
    const auto& d = assembled.drops;
    out_ << "dropped: missing_rating " << d.missing_rating << ", missing_odds " << d.missing_odds
         << ", incomplete_lineup " << d.incomplete_lineup << ", missing_game " << d.missing_game << "\n";
    issues.insert(issues.end(), assembled.issues.begin(), assembled.issues.end());
    report_issues(issues, path("issues.csv"), err_);
  }

  void estimate(const Inputs& in) {
    const auto rows = read_analysis(in.analysis);
    const auto results = ate::estimate_pipeline(rows, s_.pipeline, in.stratum == "all" ? "" : in.stratum);
    ordered_json j;
    if (results.size() == 1) {
      j = ate::to_json(results.front().aipw, results.front().stratum);
    } else {
      j = ordered_json::array();
      for (const auto& r : results) j.push_back(ate::to_json(r.aipw, r.stratum));
    }
    write_json(path("ate.json", in.out), j);
    for (const auto& r : results)
      out_ << r.stratum << ": AIPW " << r.aipw.estimate << " (" << r.aipw.ci_lo << ", " << r.aipw.ci_hi
           << "), IPW " << r.ipw.estimate << ", n1 " << r.aipw.n1 << ", n0 " << r.aipw.n0 << "\n";
  }

  void diagnose(const Inputs& in) {
    const auto rows = read_analysis(in.analysis);
    const auto results = ate::estimate_pipeline(rows, s_.pipeline, in.stratum);
    const auto& r = results.front();
    const Vec w = r.frame.column("w");
    const auto balance =
        ate::balance_report(r.frame, data::table1_covariates(), w, ate::ipw_weights(w, r.nuisances.e));
    const auto overlap = ate::overlap_report(r.nuisances.e, w);
    {
      auto f = open_out(path("balance.csv"));
      ate::write_balance_csv(f, balance);
    }
    {
      auto f = open_out(path("overlap.csv"));
      ate::write_overlap_csv(f, overlap);
    }
    std::size_t above = 0;
    for (const auto& b : balance.rows) above += std::abs(b.weighted_smd) >= balance.threshold;
    out_ << "covariates with weighted |SMD| >= " << balance.threshold << ": " << above << "\n"
         << "propensity range attempt [" << overlap.min1 << ", " << overlap.max1 << "], non-attempt ["
         << overlap.min0 << ", " << overlap.max0 << "]\n";
  }

  void forest(const Inputs& in) {
    const auto rows = read_analysis(in.analysis);
    const auto run = run_forest(rows, s_);
    const auto ate = forest::forest_ate(run.fit, run.y, run.w);
    ordered_json j;
    j["config"] = forest::to_json(s_.forest);
    j["seed"] = s_.forest.seed;
    j["importance"] = ordered_json::array();
    for (const auto& imp : run.importance) j["importance"].push_back({{"covariate", imp.covariate}, {"weight", imp.weight}});
    j["kept"] = run.kept;
    j["ate"] = ate::to_json(ate, "pooled");
    write_json(path("forest.json"), j);
    auto f = open_out(path("cates.csv"));
    csv::write_row(f, {"row", "oob_cate"});
    for (Eigen::Index i = 0; i < run.fit.tau_oob.size(); ++i)
      csv::write_row(f, {std::to_string(i), csv::format_number(run.fit.tau_oob[i])});
    out_ << "forest ATE " << ate.estimate << " (se " << ate.se << ")\nkept:";
    for (const auto& k : run.kept) out_ << " " << k;
    out_ << "\n";
  }

  void calibration(const Inputs& in) {
    const auto rows = read_analysis(in.analysis);
    const auto run = run_forest(rows, s_);
    const auto c = forest::test_calibration(run.fit);
    write_json(path("calibration.json"), forest::to_json(c));
    out_ << "mean forest prediction " << c.mean_coef << " (p " << c.mean_p << ")\n";
    if (c.diff_defined)
      out_ << "differential forest prediction " << c.diff_coef << " (p " << c.diff_p << ")\n";
    else
      out_ << "differential forest prediction undefined (constant CATEs)\n";
  }

  void rate(const Inputs& in) {
    const auto rows = read_analysis(in.analysis);
    auto seasons = data::seasons(rows);
    std::vector<std::string> train = split_list(in.train_seasons), eval = split_list(in.eval_seasons);
    if (eval.empty()) {
      if (seasons.size() < 2) throw Error(ErrorCode::InsufficientData, "rate needs at least two seasons");
      eval = {seasons.back()};
    }
    if (train.empty())
      for (const auto& season : seasons)
        if (std::find(eval.begin(), eval.end(), season) == eval.end()) train.push_back(season);
    const auto pick = [&](const std::vector<std::string>& keep) {
      std::vector<data::CovariateRow> out;
      for (const auto& r : rows)
        if (std::find(keep.begin(), keep.end(), r.season) != keep.end()) out.push_back(r);
      if (out.empty()) throw Error(ErrorCode::InsufficientData, "no rows for the requested seasons");
      return out;
    };
    const auto eval_rows = pick(eval);
    const auto names = forest_covariates();
    Vec gamma, priority;
    if (in.rule == "cate") {
      const auto scores = rate::crossfit_scores(pick(train), eval_rows, names, s_.forest);
      gamma = scores.gamma;
      priority = scores.priority;
    } else {
      if (std::find(names.begin(), names.end(), in.rule) == names.end())
        throw Error(ErrorCode::Usage, "unknown rule '" + in.rule + "'; use cate or a covariate name");
      const Vec y = column_of(eval_rows, false), w = column_of(eval_rows, true);
      const auto fit = forest::fit_causal_forest(rate::covariate_matrix(eval_rows, names), y, w, names, s_.forest);
      gamma = forest::dr_scores(y, w, fit.nuisances.e, fit.nuisances.m, fit.tau_oob);
      priority = rate::covariate_matrix(eval_rows, {in.rule}).col(0);
    }
    const auto curve = rate::rate(gamma, priority, s_.rate_bootstrap, derive_seed(s_.seed, 0x7a7e));
    {
      auto f = open_out(path("toc.csv"));
      rate::write_toc_csv(f, curve);
    }
    write_json(path("rate.json"), rate::to_json(curve, in.rule));
    out_ << "RATE (" << in.rule << ") " << curve.rate << " (se " << curve.se << ")\n";
  }

  void sensitivity(const Inputs& in) {
    const auto rows = read_analysis(in.analysis);
    const auto subset = in.stratum == "pooled" ? rows : data::filter_season(rows, in.stratum);
    if (subset.empty()) throw Error(ErrorCode::InsufficientData, "no rows for stratum '" + in.stratum + "'");
    const bool with_season = in.stratum == "pooled" && data::seasons(subset).size() > 1;
    const auto lambdas = s_.lambdas.empty() ? sensitivity::default_lambdas() : s_.lambdas;
    const auto sweep = sensitivity::lambda_sweep(data::to_frame(subset), with_season, s_.pipeline, lambdas,
                                                 s_.sensitivity_bootstrap, derive_seed(s_.seed, 0x5e45));
    auto f = open_out(path("lambda_sweep.csv"));
    sensitivity::write_lambda_csv(f, sweep);
    for (const auto& r : sweep.results)
      out_ << "lambda " << r.lambda << ": [" << r.lo << ", " << r.hi << "]" << (r.significant ? " *" : "") << "\n";
    if (sweep.failed_replicates > 0)
      err_ << sweep.failed_replicates << " bootstrap replicate(s) failed to fit and were dropped\n";
  }

  void sweep(const Inputs& in) {
    std::vector<Issue> issues;
    const auto games = load_games(in, issues);
    const Tables t = load_tables(in);
    std::vector<label::TfoDefinition> grid;
    if (in.grid.empty()) {
      grid = sensitivity::default_grid();
    } else {
      std::istringstream g(in.grid);
      std::string part;
      while (std::getline(g, part, ';')) grid.push_back(parse_cutoffs(part));
    }
    const auto results = sensitivity::cutoff_sweep(games, t.ratings, t.odds, t.aliases, grid, s_.pipeline);
    auto f = open_out(path("cutoff_sweep.csv"));
    sensitivity::write_cutoff_csv(f, results);
    for (const auto& r : results) {
      const auto& d = r.definition;
      out_ << d.window_upper_s << "," << d.window_lower_s << "," << d.attempt_cutoff_s << ": ";
      if (r.skipped)
        out_ << "skipped (n1 " << r.n1 << ", n0 " << r.n0 << ")\n";
      else
        out_ << r.estimate << " (" << r.ci_lo << ", " << r.ci_hi << ")\n";
    }
  }

  void simulate(const Inputs& in, bool seed_given) {
    if (in.games > 0) {
      synth::SeasonSpec spec;
      spec.season = in.season;
      spec.n_games = in.games;
      spec.seed = s_.seed;
      const auto season = synth::generate_season(spec);
      {
        auto f = open_out(path("pbp.csv"));
        pbp::write_pbp_csv(f, season.rows);
      }
      {
        auto f = open_out(path("starters.csv"));
        pbp::write_starters_csv(f, season.starters);
      }
      {
        auto f = open_out(path("ratings.csv"));
        csv::write_row(f, {"season", "player", "rating"});
        for (const auto& [s, p, r] : season.ratings) csv::write_row(f, {s, p, csv::format_number(r)});
      }
      {
        auto f = open_out(path("odds.csv"));
        csv::write_row(f, {"game_id", "home_spread", "total"});
        for (const auto& [id, o] : season.odds)
          csv::write_row(f, {id, csv::format_number(o.home_spread), csv::format_number(o.total)});
      }
      out_ << "games: " << in.games << "\nrows: " << season.rows.size() << "\n";
      return;
    }
    if (in.spec.empty()) throw Error(ErrorCode::Usage, "simulate needs --spec or --games");
    auto spec = synth::spec_from_json(read_json(in.spec));
    if (seed_given) spec.seed = s_.seed;
    const auto data = synth::generate(spec);
    {
      auto f = open_out(path("analysis.csv", in.out));
      data::write_analysis_csv(f, data.rows);
    }
    write_json(path("truth.json"), synth::truth_json(spec, data));
    out_ << "rows: " << data.rows.size() << "\ntrue ATE: " << data.true_ate << "\n";
  }

  void report(const Inputs& in) {
    const auto written = report::render_directory(in.dir.empty() ? dir_ : in.dir);
    for (const auto& w : written) out_ << w << "\n";
    if (written.empty()) err_ << "no artifacts found to render\n";
  }

 private:
  Settings s_;
  std::string dir_;
  std::ostream& out_;
  std::ostream& err_;
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return kUsage;
    case ErrorKind::Data: return kData;
    case ErrorKind::Numerical: return kNumerical;
  }
  return kData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-for-one causal analysis pipeline", args.empty() ? "tfo" : args[0]};
  app.fallthrough();
  app.require_subcommand(1);

  std::uint64_t seed = 42;
  std::string config_path, out_dir = ".", cutoffs;
  double clip = 0;
  int trees = 0, bootstrap = 0;
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out-dir", out_dir, "directory for output artifacts");
  auto* clip_opt = app.add_option("--clip-eps", clip, "propensity clip epsilon")->check(CLI::Range(0.0, 0.5));
  auto* cut_opt = app.add_option("--cutoffs", cutoffs, "opportunity definition U,L,A in seconds");
  auto* trees_opt = app.add_option("--trees", trees, "number of trees per forest")->check(CLI::PositiveNumber);
  auto* boot_opt = app.add_option("--bootstrap", bootstrap, "bootstrap replicates")->check(CLI::Range(2, 1000000));

  Inputs in;
  const auto pbp_opts = [&](CLI::App* sub, bool starters_required) {
    sub->add_option("--pbp", in.pbp, "play-by-play CSV")->required()->check(CLI::ExistingFile);
    auto* st = sub->add_option("--starters", in.starters, "period starters CSV")->check(CLI::ExistingFile);
    if (starters_required) st->required();
  };
  const auto table_opts = [&](CLI::App* sub) {
    sub->add_option("--ratings", in.ratings, "player ratings CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--odds", in.odds, "betting odds CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--aliases", in.aliases, "name alias CSV")->check(CLI::ExistingFile);
  };
  const auto analysis_opt = [&](CLI::App* sub) {
    sub->add_option("--analysis", in.analysis, "analysis CSV")->required()->check(CLI::ExistingFile);
  };

  auto* ingest = app.add_subcommand("ingest", "canonicalize play-by-play into events.jsonl");
  pbp_opts(ingest, false);
  ingest->add_option("--out", in.out, "output path");

  auto* label = app.add_subcommand("label", "detect and classify opportunities");
  pbp_opts(label, false);
  label->add_option("--out", in.out, "output path");

  auto* dataset = app.add_subcommand("dataset", "join observations with ratings and odds");
  pbp_opts(dataset, true);
  table_opts(dataset);
  dataset->add_option("--observations", in.observations, "observations CSV (relabels when absent)")
      ->check(CLI::ExistingFile);
  dataset->add_option("--out", in.out, "output path");

  auto* estimate = app.add_subcommand("estimate", "AIPW estimate for a stratum");
  analysis_opt(estimate);
  estimate->add_option("--stratum", in.stratum, "season label, pooled, or all");
  estimate->add_option("--out", in.out, "output path");

  auto* diagnose = app.add_subcommand("diagnose", "balance and overlap diagnostics");
  analysis_opt(diagnose);
  diagnose->add_option("--stratum", in.stratum, "season label or pooled");

  auto* forest = app.add_subcommand("forest", "causal forest CATEs, importance and ATE");
  analysis_opt(forest);

  auto* calibration = app.add_subcommand("calibration", "forest calibration test");
  analysis_opt(calibration);

  auto* rate = app.add_subcommand("rate", "TOC curve and RATE for a prioritization rule");
  analysis_opt(rate);
  rate->add_option("--rule", in.rule, "cate or a covariate name");
  rate->add_option("--train-seasons", in.train_seasons, "comma-separated training seasons");
  rate->add_option("--eval-seasons", in.eval_seasons, "comma-separated evaluation seasons");

  auto* sensitivity = app.add_subcommand("sensitivity", "bounds under unmeasured confounding");
  analysis_opt(sensitivity);
  sensitivity->add_option("--stratum", in.stratum, "season label or pooled");

  auto* sweep = app.add_subcommand("sweep", "AIPW estimates across opportunity definitions");
  pbp_opts(sweep, true);
  table_opts(sweep);
  sweep->add_option("--grid", in.grid, "definitions as U,L,A;U,L,A;...");

  auto* simulate = app.add_subcommand("simulate", "synthetic analysis data or play-by-play");
  simulate->add_option("--spec", in.spec, "DGP spec JSON")->check(CLI::ExistingFile);
  simulate->add_option("--games", in.games, "emit play-by-play for this many games instead")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--season", in.season, "season label for --games");
  simulate->add_option("--out", in.out, "analysis output path");

  auto* report = app.add_subcommand("report", "render SVG figures from artifacts");
  report->add_option("--dir", in.dir, "artifact directory (defaults to --out-dir)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("tfo");
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
    return kUsage;
  }

  try {
    Settings s;
    if (!config_path.empty()) s.apply(read_json(config_path));
    if (seed_opt->count()) s.seed = seed;
    if (clip_opt->count()) s.pipeline.clip = s.forest.clip = clip;
    if (cut_opt->count()) s.definition = parse_cutoffs(cutoffs);
    if (trees_opt->count()) s.forest.n_trees = trees;
    if (boot_opt->count()) s.rate_bootstrap = s.sensitivity_bootstrap = bootstrap;
    s.forest.seed = s.seed;
    s.definition.validate();
    s.forest.validate();
    if (!(s.pipeline.clip >= 0 && s.pipeline.clip < 0.5)) throw Error(ErrorCode::Usage, "clip_eps must be in [0, 0.5)");

    Driver d(s, out_dir, out, err);
    if (*ingest) d.ingest(in);
    else if (*label) d.label(in);
    else if (*dataset) d.dataset(in);
    else if (*estimate) d.estimate(in);
    else if (*diagnose) d.diagnose(in);
    else if (*forest) d.forest(in);
    else if (*calibration) d.calibration(in);
    else if (*rate) d.rate(in);
    else if (*sensitivity) d.sensitivity(in);
    else if (*sweep) d.sweep(in);
    else if (*simulate) d.simulate(in, seed_opt->count() > 0);
    else if (*report) d.report(in);
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.kind() == ErrorKind::Usage) err << "\n" << app.help("", CLI::AppFormatMode::All);
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace tfo::cli
