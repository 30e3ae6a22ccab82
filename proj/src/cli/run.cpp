#include "smoothquad/cli.hpp"

#include "smoothquad/errors.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#ifndef SMOOTHQUAD_VERSION
#define SMOOTHQUAD_VERSION "0.0.0"
#endif

namespace smoothquad::cli {

namespace {

using nlohmann::ordered_json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string num(std::size_t v) { return std::to_string(v); }

Table study_table(const StudyResult& r) {
  Table t;
  t.columns = {"series", "axis", "metric", "aux", "fit_slope", "fit_r2"};
  for (const auto& s : r.series)
    for (std::size_t i = 0; i < s.axis.size(); ++i)
      t.rows.push_back({s.label, num(s.axis[i]), num(s.metric[i]), i < s.aux.size() ? num(s.aux[i]) : "",
                        s.fit ? num(s.fit->slope) : "", s.fit ? num(s.fit->r2) : ""});
  return t;
}

Table price_table(const Estimate& e, const std::optional<double>& ref,
                  const std::optional<ErrorDecomposition>& dec) {
  Table t;
  t.columns = {"value", "stat_error", "work", "budget_exhausted", "reference", "relative_error",
               "bias", "smoothing_error", "quadrature_error"};
  std::vector<std::string> row = {num(e.value), num(e.stat_error), num(e.work),
                                  e.budget_exhausted ? "1" : "0"};
  row.push_back(ref ? num(*ref) : "");
  row.push_back(ref && *ref != 0.0 ? num(std::abs(e.value - *ref) / std::abs(*ref)) : "");
  row.push_back(dec ? num(dec->bias) : "");
  row.push_back(dec ? num(dec->smoothing) : "");
  row.push_back(dec ? num(dec->quadrature) : "");
  t.rows.push_back(std::move(row));
  return t;
}

ordered_json cell_json(const std::string& s) {
  if (s.empty()) return nullptr;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end && *end == '\0') return v;
  return s;
}

ordered_json plan_json(const RunConfig& c) {
  const auto& p = c.plan;
  ordered_json j;
  j["experiment"] = to_string(c.kind);
  j["name"] = c.name;
  j["model"] = p.model->describe();
  j["steps"] = p.model->grid().steps();
  j["horizon"] = p.model->grid().horizon();
  j["payoff"] = {{"name", p.payoff.name}, {"strike", p.payoff.strike}, {"weights", p.payoff.weights}};
  j["method"] = {{"name", to_string(p.method)},
                 {"integrand", to_string(p.integrand)},
                 {"richardson", p.richardson_level}};
  switch (p.method) {
    case Method::ASGQ:
      j["method"]["budget"] = p.asgq.max_evaluations;
      j["method"]["tol"] = p.asgq.tol;
      j["method"]["work_normalized"] = p.asgq.work_normalized_profit;
      break;
    case Method::RQMC:
      j["method"]["points"] = p.lattice.n_points;
      j["method"]["shifts"] = p.lattice.n_shifts;
      break;
    case Method::MC:
      j["method"]["samples"] = p.mc.n_samples;
      j["method"]["batch"] = p.mc.batch_size;
      break;
  }
  if (p.integrand == IntegrandKind::Smoothed)
    j["smoothing"] = {{"m_lag", p.smoothing.m_lag},
                      {"tol_newton", p.smoothing.tol_newton},
                      {"m_leg", p.smoothing.m_leg},
                      {"root_offset", p.smoothing.root_offset}};
  const auto& s = c.study;
  ordered_json st = ordered_json::object();
  if (s.reference) st["reference"] = *s.reference;
  if (!s.budgets.empty()) st["budgets"] = s.budgets;
  if (!s.samples.empty()) st["samples"] = s.samples;
  if (!s.steps.empty()) st["steps"] = s.steps, st["couple_exact"] = s.couple_exact;
  if (!s.directions.empty()) st["directions"] = s.directions, st["k_max"] = s.k_max;
  if (!s.m_lag_grid.empty()) st["m_lag_grid"] = s.m_lag_grid;
  if (!s.tol_grid.empty()) st["tol_grid"] = s.tol_grid;
  if (!s.offset_grid.empty()) st["offset_grid"] = s.offset_grid;
  if (c.kind == ExperimentKind::DecayProbe)
    st["levels"] = s.max_levels, st["probe_points"] = s.probe_points;
  if (c.kind == ExperimentKind::Price) st["decompose"] = s.decompose;
  j["study"] = st;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["format"] = c.format == OutputFormat::Csv ? "csv" : "jsonl";
  return j;
}

}  // namespace

RunOutput execute(const RunConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOutput out;
  const auto& p = c.plan;
  const auto& s = c.study;
  switch (c.kind) {
    case ExperimentKind::Price: {
      out.estimate = price(p);
      std::optional<ErrorDecomposition> dec;
      if (s.decompose) dec = error_decomposition(p, *s.reference);
      out.table = price_table(*out.estimate, s.reference, dec);
      break;
    }
    case ExperimentKind::QuadStudy: out.study = quadrature_error_study(p, s.budgets, *s.reference); break;
    case ExperimentKind::StatStudy: out.study = statistical_error_study(p, s.samples); break;
    case ExperimentKind::WeakError:
      out.study = weak_error_study(p, s.steps, *s.reference, {s.couple_exact, s.ci_factor});
      break;
    case ExperimentKind::MixedDiff: out.study = mixed_difference_study(p, s.directions, s.k_max); break;
    case ExperimentKind::SmoothingStudy:
      out.study = smoothing_parameter_study(p, s.m_lag_grid, s.tol_grid, s.offset_grid);
      break;
    case ExperimentKind::DecayProbe:
      out.study = to_study(derivative_decay_probe(p, s.max_levels, s.probe_points, c.seed));
      break;
  }
  if (out.study) out.table = study_table(*out.study);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::string describe(const RunConfig& c) { return plan_json(c).dump(2); }

void write_table(const Table& t, OutputFormat format, std::ostream& out) {
  if (format == OutputFormat::Csv) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << '\n';
    }
    return;
  }
  for (const auto& row : t.rows) {
    ordered_json j;
    for (std::size_t i = 0; i < t.columns.size(); ++i) j[t.columns[i]] = cell_json(row[i]);
    out << j.dump() << '\n';
  }
}

std::string metadata_json(const RunConfig& c, const RunOutput& out) {
  ordered_json j;
  j["version"] = SMOOTHQUAD_VERSION;
  j["seed"] = c.seed;
  j["wall_seconds"] = out.wall_seconds;
  j["plan"] = plan_json(c);
  j["config_text"] = c.source;
  if (out.study) {
    const auto& r = *out.study;
    j["study"] = {{"kind", r.kind},
                  {"axis", r.axis_name},
                  {"metric", r.metric_name},
                  {"aux", r.aux_name},
                  {"flags", r.flags},
                  {"metadata", r.metadata}};
    ordered_json fits = ordered_json::object();
    for (const auto& s : r.series)
      if (s.fit) fits[s.label] = {{"slope", s.fit->slope}, {"intercept", s.fit->intercept}, {"r2", s.fit->r2}};
    j["study"]["fits"] = fits;
  }
  if (out.estimate) j["budget_exhausted"] = out.estimate->budget_exhausted;
  return j.dump(2);
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Price digital, call and basket options with numerical smoothing", "smoothquad"};
  std::string config_path, out_dir = ".", format, show_preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool dry_run = false, list = false;
  app.add_option("--config", config_path, "Experiment config file");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Top-level seed (overrides the config)");
  app.add_option("--threads", threads, "Worker cap (fallback: SMOOTHQUAD_THREADS)");
  app.add_option("--format", format, "csv or jsonl (overrides the config)")
      ->check(CLI::IsMember({"csv", "jsonl"}));
  app.add_flag("--dry-run", dry_run, "Validate and print the resolved plan; write nothing");
  app.add_flag("--list-presets", list, "Print the shipped reference experiments");
  app.add_option("--show-preset", show_preset, "Print the model and payoff blocks of one preset");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (list) {
      list_presets(std::cout);
      return 0;
    }
    if (!show_preset.empty()) {
      std::cout << find_preset(show_preset).blocks;
      return 0;
    }
    if (config_path.empty()) throw ConfigError("--config", "is required");
    Overrides ov;
    ov.seed = seed;
    ov.threads = threads;
    if (!threads) {
      if (const char* env = std::getenv("SMOOTHQUAD_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1) throw ConfigError("SMOOTHQUAD_THREADS", "must be a positive integer");
        ov.threads = static_cast<std::size_t>(v);
      }
    }
    if (threads && *threads < 1) throw ConfigError("--threads", "must be >= 1");
    if (!format.empty()) ov.format = format == "csv" ? OutputFormat::Csv : OutputFormat::Jsonl;
    const RunConfig cfg = load_config(config_path, ov);
    if (dry_run) {
      std::cout << describe(cfg) << '\n';
      return 0;
    }

    RunOutput result;
    try {
      result = execute(cfg);
    } catch (const std::exception& e) {
      std::cerr << "smoothquad: run failed: " << e.what() << '\n';
      return 3;
    }
    try {
      std::filesystem::create_directories(out_dir);
      const auto base = std::filesystem::path(out_dir) / cfg.name;
      std::ofstream data(base.string() + (cfg.format == OutputFormat::Csv ? ".csv" : ".jsonl"),
                         std::ios::trunc);
      write_table(result.table, cfg.format, data);
      std::ofstream meta(base.string() + ".meta.json", std::ios::trunc);
      meta << metadata_json(cfg, result) << '\n';
      if (!data || !meta) throw std::runtime_error("cannot write to '" + out_dir + "'");
    } catch (const std::exception& e) {
      std::cerr << "smoothquad: " << e.what() << '\n';
      return 3;
    }
    write_table(result.table, OutputFormat::Csv, std::cout);
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "smoothquad: invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "smoothquad: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace smoothquad::cli
