// Experiment orchestration: config parsing, per-trial dispatch over the
// exact/schedule/estimate/counting tasks, and deterministic JSON/CSV
// reports. Identical config and seed produce byte-identical report files;
// wall-clock time is therefore reported on stderr, never in the file.
#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <json.hpp>

#include "gibbsum/common.hpp"
#include "gibbsum/estimator.hpp"
#include "gibbsum/models.hpp"
#include "gibbsum/qsim.hpp"
#include "gibbsum/sampling.hpp"

namespace gibbsum {

enum class Task {
  exact,
  schedule_classical,
  schedule_quantum,
  estimate_classical,
  estimate_quantum,
  count_colorings,
};
std::string to_string(Task task);
Task task_from_string(const std::string& s);

struct ExperimentConfig {
  nlohmann::json model_json;
  std::shared_ptr<Hamiltonian> model;
  Task task = Task::exact;
  double beta_min = 0.0;
  double beta_max = kInf;
  double epsilon = 0.2;
  double eta = 0.05;    // echoed for provenance; estimator budgets are fixed
  double delta = 0.1;   // schedule-generation failure budget
  SamplerConfig sampler;
  AEBackend backend;
  std::uint64_t seed = 0;
  int trials = 1;
  std::string method = "classical";  // count-colorings: exact|classical|quantum
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;

  static ExperimentConfig from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;
};

struct RunRecord {
  nlohmann::json json;

  std::string to_report_string() const;  // pretty, key-sorted, newline-terminated
  std::string to_csv() const;            // one row per trial
};

// Runs config.trials independent trials (seeds derived from config.seed)
// and collects results, exact references when the model is enumerable, and
// aggregated resource counters. Per-trial pipeline failures are recorded in
// the trial entry; configuration problems throw ValidationError.
RunRecord run_experiment(const ExperimentConfig& config);

struct ColoringResult {
  double count_hat = 0.0;
  double log_count_hat = -kInf;
  bool is_exact = false;
  nlohmann::json details;
};

// Number of proper k-colorings of the graph underlying `model`: either by
// enumeration (method "exact") or as k^V times the estimated ratio
// Z(inf)/Z(0) of the Potts model (methods "classical"/"quantum").
// Edgeless graphs and instances below the estimator entry gates are
// answered exactly.
ColoringResult count_colorings(const PottsModel& model, double epsilon,
                               const std::string& method, std::uint64_t seed,
                               const SamplerConfig& sampler_config, const AEBackend& backend,
                               std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace gibbsum
