#include "gibbsum/report.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "gibbsum/schedule.hpp"

namespace gibbsum {

std::string to_string(Task task) {
  switch (task) {
    case Task::exact: return "exact";
    case Task::schedule_classical: return "schedule-classical";
    case Task::schedule_quantum: return "schedule-quantum";
    case Task::estimate_classical: return "estimate-classical";
    case Task::estimate_quantum: return "estimate-quantum";
    case Task::count_colorings: return "count-colorings";
  }
  throw ValidationError("unknown task");
}

Task task_from_string(const std::string& s) {
  if (s == "exact") return Task::exact;
  if (s == "schedule-classical") return Task::schedule_classical;
  if (s == "schedule-quantum") return Task::schedule_quantum;
  if (s == "estimate-classical") return Task::estimate_classical;
  if (s == "estimate-quantum") return Task::estimate_quantum;
  if (s == "count-colorings") return Task::count_colorings;
  throw ValidationError("config: unknown task '" + s + "'");
}

namespace {

double parse_beta(const nlohmann::json& v, const char* field) {
  double b;
  if (v.is_string()) {
    if (v.get<std::string>() != "inf")
      throw ValidationError(std::string("config: ") + field + " string must be 'inf'");
    b = kInf;
  } else if (v.is_number()) {
    b = v.get<double>();
  } else {
    throw ValidationError(std::string("config: ") + field + " must be a number or 'inf'");
  }
  if (std::isnan(b) || b < 0.0)
    throw ValidationError(std::string("config: ") + field + " must be >= 0");
  return b;
}

nlohmann::json number_or_inf(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

nlohmann::json ledger_to_json(const ResourceLedger& l) {
  return {{"reflections_invoked", l.reflections_invoked},
          {"qsample_copies_consumed", l.qsample_copies_consumed},
          {"qsample_copies_restored", l.qsample_copies_restored},
          {"qsample_repreparations", l.qsample_repreparations}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& spec) {
  if (!spec.is_object()) throw ValidationError("config: expected a JSON object");
  ExperimentConfig cfg;
  if (!spec.contains("model")) throw ValidationError("config: missing 'model'");
  cfg.model_json = spec["model"];
  cfg.model = std::shared_ptr<Hamiltonian>(load_model(cfg.model_json));
  if (!spec.contains("task") || !spec["task"].is_string())
    throw ValidationError("config: missing string field 'task'");
  cfg.task = task_from_string(spec["task"].get<std::string>());

  if (spec.contains("beta_min")) cfg.beta_min = parse_beta(spec["beta_min"], "beta_min");
  if (spec.contains("beta_max")) cfg.beta_max = parse_beta(spec["beta_max"], "beta_max");
  if (cfg.beta_min > cfg.beta_max)
    throw ValidationError("config: beta_min must not exceed beta_max");

  auto get_unit = [&](const char* key, double fallback) {
    if (!spec.contains(key)) return fallback;
    const double v = spec[key].get<double>();
    if (!(v > 0.0) || v >= 1.0)
      throw ValidationError(std::string("config: ") + key + " must be in (0,1)");
    return v;
  };
  cfg.epsilon = get_unit("epsilon", cfg.epsilon);
  cfg.eta = get_unit("eta", cfg.eta);
  cfg.delta = get_unit("delta", cfg.delta);

  if (spec.contains("sampler")) cfg.sampler = SamplerConfig::from_json(spec["sampler"]);
  if (spec.contains("ae")) cfg.backend = AEBackend::from_json(spec["ae"]);
  if (spec.contains("seed")) cfg.seed = spec["seed"].get<std::uint64_t>();
  if (spec.contains("trials")) {
    cfg.trials = spec["trials"].get<int>();
    if (cfg.trials < 1) throw ValidationError("config: trials must be >= 1");
  }
  if (spec.contains("method")) {
    cfg.method = spec["method"].get<std::string>();
    if (cfg.method != "exact" && cfg.method != "classical" && cfg.method != "quantum")
      throw ValidationError("config: method must be exact, classical, or quantum");
  }
  if (spec.contains("enumeration_cap"))
    cfg.enumeration_cap = spec["enumeration_cap"].get<std::uint64_t>();
  return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j{{"model", model_json},
                   {"task", to_string(task)},
                   {"beta_min", number_or_inf(beta_min)},
                   {"beta_max", number_or_inf(beta_max)},
                   {"epsilon", epsilon},
                   {"eta", eta},
                   {"delta", delta},
                   {"sampler", sampler.to_json()},
                   {"ae", backend.to_json()},
                   {"seed", seed},
                   {"trials", trials},
                   {"enumeration_cap", enumeration_cap}};
  if (task == Task::count_colorings) j["method"] = method;
  return j;
}

namespace {

struct ExactRefs {
  bool available = false;
  double log_z_min = 0.0;
  double log_z_max = 0.0;
  double log_q = 0.0;
};

ExactRefs compute_exact_refs(const ExperimentConfig& cfg) {
  ExactRefs refs;
  try {
    refs.log_z_min = exact_log_partition(*cfg.model, cfg.beta_min, cfg.enumeration_cap);
    refs.log_z_max = exact_log_partition(*cfg.model, cfg.beta_max, cfg.enumeration_cap);
    refs.log_q = refs.log_z_max - refs.log_z_min;
    refs.available = true;
  } catch (const PipelineError&) {
    refs.available = false;  // enumeration cap exceeded: no exact references
  }
  return refs;
}

// |exp(log_estimate - log_truth) - 1|, guarded for infinities.
nlohmann::json relative_error_json(double log_estimate, double log_truth) {
  if (!std::isfinite(log_estimate) || !std::isfinite(log_truth)) return nullptr;
  return std::abs(std::expm1(log_estimate - log_truth));
}

struct TrialResult {
  nlohmann::json json;
  ResourceLedger ledger;        // quantum resource counters spent by this trial
  std::uint64_t samples = 0;    // classical sampler draws spent by this trial
};

TrialResult run_trial(const ExperimentConfig& cfg, int index, const ExactRefs& refs) {
  ResourceLedger total_ledger;
  std::uint64_t total_samples = 0;
  nlohmann::json t;
  t["trial"] = index;
  const std::uint64_t trial_seed = derive_seed(cfg.seed, "trial", static_cast<std::uint64_t>(index));
  t["seed"] = trial_seed;
  t["error"] = nullptr;
  try {
    switch (cfg.task) {
      case Task::exact: {
        const PartitionValue zmin =
            exact_partition_function(*cfg.model, cfg.beta_min, cfg.enumeration_cap);
        const PartitionValue zmax =
            exact_partition_function(*cfg.model, cfg.beta_max, cfg.enumeration_cap);
        t["z_beta_min"] = zmin.value;
        t["log_z_beta_min"] = number_or_inf(zmin.log_value);
        t["z_beta_max"] = zmax.value;
        t["log_z_beta_max"] = number_or_inf(zmax.log_value);
        t["log_q"] = number_or_inf(zmax.log_value - zmin.log_value);
        t["q"] = std::exp(zmax.log_value - zmin.log_value);
        break;
      }
      case Task::schedule_classical: {
        SamplerConfig sc = cfg.sampler;
        sc.seed = trial_seed;
        GibbsSampler sampler(*cfg.model, sc, cfg.enumeration_cap);
        const CoolingSchedule sched = generate_schedule_classical(
            *cfg.model, cfg.beta_min, cfg.beta_max, cfg.delta, sampler);
        t["schedule"] = sched.to_json();
        t["samples_used"] = sampler.samples_drawn();
        total_samples += sampler.samples_drawn();
        t["verification"] =
            refs.available
                ? verify_schedule(*cfg.model, sched, 0.0, sched.c2_target, cfg.enumeration_cap)
                      .to_json()
                : nlohmann::json(nullptr);
        break;
      }
      case Task::schedule_quantum: {
        ResourceLedger ledger;
        const CoolingSchedule sched = generate_schedule_quantum(
            *cfg.model, cfg.beta_min, cfg.beta_max, cfg.delta, cfg.backend, trial_seed, ledger);
        t["schedule"] = sched.to_json();
        t["ledger"] = ledger_to_json(ledger);
        total_ledger += ledger;
        t["verification"] =
            refs.available
                ? verify_schedule(*cfg.model, sched, 0.0, sched.c2_target, cfg.enumeration_cap)
                      .to_json()
                : nlohmann::json(nullptr);
        break;
      }
      case Task::estimate_classical: {
        SamplerConfig sc = cfg.sampler;
        sc.seed = trial_seed;
        GibbsSampler sampler(*cfg.model, sc, cfg.enumeration_cap);
        const EstimateReport rep =
            estimate_ratio_classical(*cfg.model, cfg.beta_min, cfg.beta_max, cfg.epsilon, sampler);
        t["estimate"] = rep.to_json();
        total_samples += sampler.samples_drawn();
        const nlohmann::json rel =
            refs.available ? relative_error_json(rep.log_q_hat, refs.log_q) : nlohmann::json(nullptr);
        t["relative_error"] = rel;
        t["within_target"] = rel.is_null() ? nlohmann::json(nullptr)
                                           : nlohmann::json(rel.get<double>() <= cfg.epsilon);
        break;
      }
      case Task::estimate_quantum: {
        const EstimateReport rep = estimate_ratio_quantum(*cfg.model, cfg.beta_min, cfg.beta_max,
                                                          cfg.epsilon, cfg.backend, trial_seed);
        t["estimate"] = rep.to_json();
        total_ledger += rep.ledger;
        total_samples += rep.samples_used;
        const nlohmann::json rel =
            refs.available ? relative_error_json(rep.log_q_hat, refs.log_q) : nlohmann::json(nullptr);
        t["relative_error"] = rel;
        // The quantum pipeline guarantees (2 epsilon)-relative accuracy.
        t["within_target"] = rel.is_null() ? nlohmann::json(nullptr)
                                           : nlohmann::json(rel.get<double>() <= 2.0 * cfg.epsilon);
        break;
      }
      case Task::count_colorings: {
        const auto* potts = dynamic_cast<const PottsModel*>(cfg.model.get());
        if (potts == nullptr)
          throw ValidationError("count-colorings: model must be a potts model");
        const ColoringResult res = count_colorings(*potts, cfg.epsilon, cfg.method, trial_seed,
                                                   cfg.sampler, cfg.backend, cfg.enumeration_cap);
        t["count_hat"] = res.count_hat;
        t["log_count_hat"] = number_or_inf(res.log_count_hat);
        t["is_exact"] = res.is_exact;
        t["details"] = res.details;
        if (refs.available) {
          const double log_exact = exact_log_partition(*cfg.model, kInf, cfg.enumeration_cap);
          const nlohmann::json rel = relative_error_json(res.log_count_hat, log_exact);
          t["relative_error"] = rel;
          t["within_target"] = rel.is_null() ? nlohmann::json(nullptr)
                                             : nlohmann::json(rel.get<double>() <= cfg.epsilon);
        } else {
          t["relative_error"] = nullptr;
          t["within_target"] = nullptr;
        }
        break;
      }
    }
    t["status"] = "ok";
  } catch (const PipelineError& e) {
    t["status"] = "error";
    t["error"] = e.what();
  }
  return {std::move(t), total_ledger, total_samples};
}

// Bounded worker pool over trials; results are slotted by index so the
// assembled report does not depend on scheduling order.
std::vector<TrialResult> run_all_trials(const ExperimentConfig& config, const ExactRefs& refs) {
  const int trials = config.trials;
  std::vector<TrialResult> slots(static_cast<std::size_t>(trials));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(trials));
  const unsigned workers = std::max(
      1u, std::min<unsigned>(std::thread::hardware_concurrency(), static_cast<unsigned>(trials)));

  std::atomic<int> next{0};
  auto work = [&]() {
    for (int i = next.fetch_add(1); i < trials; i = next.fetch_add(1)) {
      try {
        slots[static_cast<std::size_t>(i)] = run_trial(config, i, refs);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);  // configuration-level errors, e.g. ValidationError
  return slots;
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& config) {
  const ExactRefs refs = compute_exact_refs(config);
  const std::vector<TrialResult> results = run_all_trials(config, refs);

  ResourceLedger total_ledger;
  std::uint64_t total_samples = 0;
  nlohmann::json trials = nlohmann::json::array();
  int ok_count = 0;
  int within_count = 0;
  int within_known = 0;
  int verified_count = 0;
  int verified_known = 0;
  for (const TrialResult& result : results) {
    total_ledger += result.ledger;
    total_samples += result.samples;
    const nlohmann::json& t = result.json;
    if (t["status"] == "ok") {
      ++ok_count;
      if (t.contains("within_target") && t["within_target"].is_boolean()) {
        ++within_known;
        if (t["within_target"].get<bool>()) ++within_count;
      }
      if (t.contains("verification") && t["verification"].is_object()) {
        ++verified_known;
        if (t["verification"]["ok"].get<bool>()) ++verified_count;
      }
    }
    trials.push_back(t);
  }

  nlohmann::json summary{{"trials", config.trials}, {"ok", ok_count}};
  if (within_known > 0 || config.task == Task::estimate_classical ||
      config.task == Task::estimate_quantum || config.task == Task::count_colorings) {
    summary["within_target"] = within_count;
    summary["success_fraction"] =
        config.trials > 0 ? static_cast<double>(within_count) / config.trials : 0.0;
  }
  if (verified_known > 0 || config.task == Task::schedule_classical ||
      config.task == Task::schedule_quantum) {
    summary["verified"] = verified_count;
    summary["verified_fraction"] =
        config.trials > 0 ? static_cast<double>(verified_count) / config.trials : 0.0;
  }

  RunRecord record;
  record.json = {{"schema_version", 1},
                 {"config", config.to_json()},
                 {"exact", refs.available
                               ? nlohmann::json{{"log_z_beta_min", number_or_inf(refs.log_z_min)},
                                                {"log_z_beta_max", number_or_inf(refs.log_z_max)},
                                                {"log_q", number_or_inf(refs.log_q)},
                                                {"q", std::exp(refs.log_q)}}
                               : nlohmann::json(nullptr)},
                 {"trials", trials},
                 {"summary", summary},
                 {"totals", {{"samples_drawn", total_samples}, {"ledger", ledger_to_json(total_ledger)}}},
                 {"wall_clock_seconds", nullptr}};
  return record;
}

std::string RunRecord::to_report_string() const { return json.dump(2) + "\n"; }

std::string RunRecord::to_csv() const {
  std::ostringstream out;
  out << "trial,status,log_q_hat,q_hat,relative_error,within_target,samples_used,"
         "reflections_invoked,qsample_copies_consumed\n";
  for (const auto& t : json["trials"]) {
    out << t.value("trial", -1) << "," << t.value("status", "");
    const bool has_est = t.contains("estimate") && t["estimate"].is_object();
    out << ",";
    if (has_est) out << t["estimate"]["log_q_hat"].get<double>();
    out << ",";
    if (has_est) out << t["estimate"]["q_hat"].get<double>();
    out << ",";
    if (t.contains("relative_error") && t["relative_error"].is_number())
      out << t["relative_error"].get<double>();
    out << ",";
    if (t.contains("within_target") && t["within_target"].is_boolean())
      out << (t["within_target"].get<bool>() ? "true" : "false");
    out << ",";
    if (has_est) {
      out << t["estimate"]["samples_used"].get<std::uint64_t>();
    } else if (t.contains("samples_used")) {
      out << t["samples_used"].get<std::uint64_t>();
    }
    out << ",";
    if (has_est) out << t["estimate"]["ledger"]["reflections_invoked"].get<std::uint64_t>();
    out << ",";
    if (has_est) out << t["estimate"]["ledger"]["qsample_copies_consumed"].get<std::uint64_t>();
    out << "\n";
  }
  return out.str();
}

ColoringResult count_colorings(const PottsModel& model, double epsilon,
                               const std::string& method, std::uint64_t seed,
                               const SamplerConfig& sampler_config, const AEBackend& backend,
                               std::uint64_t cap) {
  if (method != "exact" && method != "classical" && method != "quantum")
    throw ValidationError("count_colorings: method must be exact, classical, or quantum");
  if (!(epsilon > 0.0) || epsilon >= 1.0)
    throw ValidationError("count_colorings: epsilon must be in (0,1)");

  const double log_total_states =
      static_cast<double>(model.vertices()) * std::log(static_cast<double>(model.colors()));
  ColoringResult res;

  if (model.edges().empty()) {
    // No constraints: every assignment is proper.
    res.is_exact = true;
    res.log_count_hat = log_total_states;
    res.count_hat = std::exp(log_total_states);
    res.details = {{"shortcut", "edgeless"}};
    return res;
  }

  bool gates_ok = true;
  try {
    check_assumption_gates(model);
  } catch (const ValidationError&) {
    gates_ok = false;
  }

  if (method == "exact" || !gates_ok) {
    const Enumeration& en = enumerate_states(model, cap);
    const std::uint64_t count = en.energy_counts[0];
    res.is_exact = true;
    res.count_hat = static_cast<double>(count);
    res.log_count_hat = count > 0 ? std::log(static_cast<double>(count)) : -kInf;
    res.details = {{"shortcut", method == "exact" ? "enumeration" : "below-entry-gates"}};
    return res;
  }

  if (method == "classical") {
    SamplerConfig sc = sampler_config;
    sc.seed = seed;
    GibbsSampler sampler(model, sc, cap);
    const EstimateReport rep = estimate_ratio_classical(model, 0.0, kInf, epsilon, sampler);
    res.log_count_hat = rep.log_q_hat + log_total_states;
    res.details = rep.to_json();
  } else {
    const EstimateReport rep = estimate_ratio_quantum(model, 0.0, kInf, epsilon, backend, seed);
    res.log_count_hat = rep.log_q_hat + log_total_states;
    res.details = rep.to_json();
  }
  res.count_hat = std::exp(res.log_count_hat);
  return res;
}

}  // namespace gibbsum
