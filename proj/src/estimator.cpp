#include "gibbsum/estimator.hpp"

#include <algorithm>
#include <cmath>

namespace gibbsum {

PairedSampleSpec PairedSampleSpec::from_schedule(const CoolingSchedule& schedule) {
  PairedSampleSpec spec;
  for (std::size_t i = 0; i + 1 < schedule.betas.size(); ++i) {
    const double lo = schedule.betas[i];
    const double hi = schedule.betas[i + 1];
    if (lo == hi) continue;
    StageGeometry g;
    g.beta_lo = lo;
    g.beta_hi = hi;
    g.mid = std::isinf(hi) ? kInf : 0.5 * (lo + hi);
    g.d = std::isinf(hi) ? kInf : 0.5 * (hi - lo);
    spec.stages.push_back(g);
  }
  return spec;
}

double relative_variance_naive(const Hamiltonian& h, double beta_min, double beta_max,
                               std::uint64_t cap) {
  if (!(beta_min <= beta_max)) throw ValidationError("need beta_min <= beta_max");
  const double far = std::isinf(beta_max) ? kInf : 2.0 * beta_max - beta_min;
  const double log_s = exact_log_partition(h, far, cap) + exact_log_partition(h, beta_min, cap) -
                       2.0 * exact_log_partition(h, beta_max, cap);
  return std::exp(log_s);
}

double paired_stage_relative_variance(const Hamiltonian& h, double beta_lo, double beta_hi,
                                      std::uint64_t cap) {
  if (!(beta_lo <= beta_hi)) throw ValidationError("need beta_lo <= beta_hi");
  const double mid = std::isinf(beta_hi) ? kInf : 0.5 * (beta_lo + beta_hi);
  const double log_s = exact_log_partition(h, beta_lo, cap) + exact_log_partition(h, beta_hi, cap) -
                       2.0 * exact_log_partition(h, mid, cap);
  return std::exp(log_s);
}

std::uint64_t dyer_frieze_plan(double B, std::size_t ell, double eta, double epsilon) {
  if (!(B >= 1.0)) throw ValidationError("dyer_frieze_plan: B must be >= 1");
  if (ell == 0) throw ValidationError("dyer_frieze_plan: need at least one stage");
  if (!(eta > 0.0) || eta >= 1.0) throw ValidationError("dyer_frieze_plan: eta in (0,1)");
  if (!(epsilon > 0.0) || epsilon >= 1.0)
    throw ValidationError("dyer_frieze_plan: epsilon in (0,1)");
  const double m = std::ceil(2.0 * B * static_cast<double>(ell) / (eta * epsilon * epsilon));
  return static_cast<std::uint64_t>(m);
}

std::vector<StageSamples> draw_paired_samples(const PairedSampleSpec& spec,
                                              GibbsSampler& sampler,
                                              std::uint64_t m_per_stage) {
  if (m_per_stage == 0) throw ValidationError("draw_paired_samples: m must be >= 1");
  std::vector<StageSamples> out;
  out.reserve(spec.stages.size());
  for (const StageGeometry& g : spec.stages) {
    StageSamples s;
    s.geom = g;
    s.m = m_per_stage;
    s.v_counts = sampler.draw_energy_counts(g.beta_lo, m_per_stage);
    s.w_counts = sampler.draw_energy_counts(g.beta_hi, m_per_stage);
    out.push_back(std::move(s));
  }
  return out;
}

double stage_log_mean(const std::vector<std::uint64_t>& counts, double d_signed,
                      std::uint64_t m) {
  if (m == 0) throw ValidationError("stage_log_mean: m must be >= 1");
  std::vector<double> terms;
  terms.reserve(counts.size());
  for (std::size_t e = 0; e < counts.size(); ++e) {
    if (counts[e] == 0) continue;
    double factor;
    if (e == 0) {
      factor = 0.0;  // d * 0 = 0 even for infinite d
    } else if (d_signed == -kInf) {
      continue;  // zero weight on excited states
    } else if (d_signed == kInf) {
      throw PipelineError("stage mean: excited states drawn where only ground states exist");
    } else {
      factor = d_signed * static_cast<double>(e);
    }
    terms.push_back(std::log(static_cast<double>(counts[e])) + factor);
  }
  if (terms.empty()) throw PipelineError("degenerate stage: empirical mean is zero");
  return log_sum_exp(terms) - std::log(static_cast<double>(m));
}

double product_mean_estimate(const std::vector<std::vector<double>>& stage_samples) {
  if (stage_samples.empty()) throw ValidationError("product_mean_estimate: no stages");
  double log_product = 0.0;
  for (const auto& samples : stage_samples) {
    if (samples.empty()) throw ValidationError("product_mean_estimate: empty stage");
    double mean = 0.0;
    for (double v : samples) {
      if (v < 0.0) throw ValidationError("product_mean_estimate: negative sample");
      mean += v;
    }
    mean /= static_cast<double>(samples.size());
    if (mean == 0.0) throw PipelineError("degenerate stage: empirical mean is zero");
    log_product += std::log(mean);
  }
  return std::exp(log_product);
}

nlohmann::json EstimateReport::to_json() const {
  nlohmann::json stages_json = nlohmann::json::array();
  for (const StageDiagnostic& s : stages) {
    stages_json.push_back({{"beta_lo", s.beta_lo},
                           {"beta_hi", std::isinf(s.beta_hi) ? nlohmann::json("inf")
                                                             : nlohmann::json(s.beta_hi)},
                           {"d", std::isinf(s.d) ? nlohmann::json("inf") : nlohmann::json(s.d)},
                           {"log_mean_v", s.log_mean_v},
                           {"log_mean_w", s.log_mean_w},
                           {"m", s.m}});
  }
  return {{"log_q_hat", log_q_hat},
          {"q_hat", q_hat()},
          {"epsilon_target", epsilon_target},
          {"eta_target", eta_target},
          {"samples_used", samples_used},
          {"schedule_samples", schedule_samples},
          {"samples_per_stage", samples_per_stage},
          {"schedule_length", schedule_length},
          {"schedule", schedule.to_json()},
          {"stages", stages_json},
          {"ledger",
           {{"reflections_invoked", ledger.reflections_invoked},
            {"qsample_copies_consumed", ledger.qsample_copies_consumed},
            {"qsample_copies_restored", ledger.qsample_copies_restored},
            {"qsample_repreparations", ledger.qsample_repreparations}}}};
}

EstimateReport estimate_ratio_classical(const Hamiltonian& h, double beta_min, double beta_max,
                                        double epsilon, GibbsSampler& sampler) {
  check_assumption_gates(h);
  if (!(epsilon > 0.0) || epsilon >= 1.0)
    throw ValidationError("estimate_ratio_classical: epsilon must be in (0,1)");

  EstimateReport report;
  report.epsilon_target = epsilon;
  report.eta_target = 0.2;  // 1/10 schedule + 2 * 1/20 estimation

  const std::uint64_t samples_before = sampler.samples_drawn();
  report.schedule = generate_schedule_classical(h, beta_min, beta_max, 0.1, sampler);
  report.schedule_samples = sampler.samples_drawn() - samples_before;
  report.schedule_length = report.schedule.length();

  const PairedSampleSpec spec = PairedSampleSpec::from_schedule(report.schedule);
  if (spec.stages.empty()) {
    report.log_q_hat = 0.0;  // beta_min == beta_max
    return report;
  }

  const std::uint64_t m =
      dyer_frieze_plan(report.schedule.c2_target, spec.stages.size(), 0.05, epsilon / 3.0);
  report.samples_per_stage = m;
  report.samples_used = 2 * static_cast<std::uint64_t>(spec.stages.size()) * m;

  const auto samples = draw_paired_samples(spec, sampler, m);
  double log_q = 0.0;
  for (const StageSamples& s : samples) {
    StageDiagnostic diag;
    diag.beta_lo = s.geom.beta_lo;
    diag.beta_hi = s.geom.beta_hi;
    diag.d = s.geom.d;
    diag.m = s.m;
    diag.log_mean_v = stage_log_mean(s.v_counts, -s.geom.d, s.m);
    diag.log_mean_w = stage_log_mean(s.w_counts, s.geom.d, s.m);
    log_q += diag.log_mean_v - diag.log_mean_w;
    report.stages.push_back(diag);
  }
  report.log_q_hat = log_q;
  return report;
}

}  // namespace gibbsum
