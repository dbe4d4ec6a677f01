#include "gibbsum/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace gibbsum {

IntervalPartition build_partition(int n, double q) {
  if (n < 1) throw ValidationError("build_partition: n must be >= 1");
  if (!(q > 0.0) || std::isinf(q)) throw ValidationError("build_partition: q must be positive");
  const double root_q = std::sqrt(q);
  IntervalPartition partition;
  int b = 0;
  while (b <= n) {
    const int width = static_cast<int>(std::floor(static_cast<double>(b) / root_q));
    const int hi = std::min(b + width, n);
    partition.intervals.push_back({b, hi});
    b = hi + 1;
  }
  return partition;
}

std::string to_string(MoveTag tag) {
  switch (tag) {
    case MoveTag::long_move: return "long";
    case MoveTag::forbidden_capped: return "forbidden-capped";
    case MoveTag::variance_capped: return "variance-capped";
  }
  throw ValidationError("unknown move tag");
}

MoveTag move_tag_from_string(const std::string& s) {
  if (s == "long") return MoveTag::long_move;
  if (s == "forbidden-capped") return MoveTag::forbidden_capped;
  if (s == "variance-capped") return MoveTag::variance_capped;
  throw ValidationError("schedule: unknown move tag '" + s + "'");
}

namespace {

nlohmann::json beta_to_json(double beta) {
  if (std::isinf(beta)) return "inf";
  return beta;
}

double beta_from_json(const nlohmann::json& v) {
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return kInf;
    throw ValidationError("schedule: beta string must be 'inf'");
  }
  if (!v.is_number()) throw ValidationError("schedule: beta must be a number or 'inf'");
  return v.get<double>();
}

}  // namespace

nlohmann::json CoolingSchedule::to_json() const {
  nlohmann::json betas_json = nlohmann::json::array();
  for (double b : betas) betas_json.push_back(beta_to_json(b));
  nlohmann::json moves_json = nlohmann::json::array();
  for (const Move& m : moves) {
    moves_json.push_back({{"tag", to_string(m.tag)},
                          {"interval", {m.interval.lo, m.interval.hi}}});
  }
  return {{"betas", betas_json}, {"moves", moves_json}, {"c2", c2_target}, {"seed", seed}};
}

CoolingSchedule CoolingSchedule::from_json(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("betas") || !spec["betas"].is_array())
    throw ValidationError("schedule: expected object with 'betas' array");
  CoolingSchedule sched;
  for (const auto& v : spec["betas"]) sched.betas.push_back(beta_from_json(v));
  for (std::size_t i = 1; i < sched.betas.size(); ++i) {
    if (!(sched.betas[i] >= sched.betas[i - 1]))
      throw ValidationError("schedule: betas must be nondecreasing");
  }
  if (spec.contains("moves")) {
    for (const auto& m : spec["moves"]) {
      if (!m.is_object() || !m.contains("tag") || !m.contains("interval") ||
          !m["interval"].is_array() || m["interval"].size() != 2)
        throw ValidationError("schedule: malformed move entry");
      Move move;
      move.tag = move_tag_from_string(m["tag"].get<std::string>());
      move.interval = {m["interval"][0].get<int>(), m["interval"][1].get<int>()};
      sched.moves.push_back(move);
    }
    if (!sched.moves.empty() && sched.moves.size() != sched.length())
      throw ValidationError("schedule: move count must match beta pair count");
  }
  if (spec.contains("c2")) sched.c2_target = spec["c2"].get<double>();
  if (spec.contains("seed")) sched.seed = spec["seed"].get<std::uint64_t>();
  return sched;
}

void check_assumption_gates(const Hamiltonian& h) {
  const double lnn = std::log(static_cast<double>(h.max_energy()));
  if (lnn < 1.0)
    throw ValidationError("assumption gate: max energy too small (need ln n >= 1)");
  const double q = h.q();
  if (std::log(q) < 1.0)
    throw ValidationError("assumption gate: state space too small (need ln q >= 1)");
  if (static_cast<double>(h.state_count()) < lnn)
    throw ValidationError("assumption gate: need |Omega| >= ln n");
}

std::uint64_t heavy_sample_count(double h_param, double delta) {
  if (!(h_param > 0.0) || !(delta > 0.0) || delta >= 1.0)
    throw ValidationError("heavy_sample_count: need h > 0 and delta in (0,1)");
  return static_cast<std::uint64_t>(std::ceil((8.0 / h_param) * std::log(1.0 / delta)));
}

namespace {

std::uint64_t interval_hits(const std::vector<std::uint64_t>& counts, const EnergyInterval& I) {
  std::uint64_t hits = 0;
  const int hi = std::min<int>(I.hi, static_cast<int>(counts.size()) - 1);
  for (int e = I.lo; e <= hi; ++e) hits += counts[e];
  return hits;
}

}  // namespace

bool is_heavy(const EnergyInterval& I, double beta, double h_param, double delta,
              GibbsSampler& sampler) {
  const std::uint64_t s = heavy_sample_count(h_param, delta);
  const auto counts = sampler.draw_energy_counts(beta, s);
  const double u = static_cast<double>(interval_hits(counts, I)) / static_cast<double>(s);
  return u >= 2.0 * h_param;
}

double est_ratio(const EnergyInterval& I, double beta2, double beta1, double h_param,
                 double delta, GibbsSampler& sampler) {
  if (std::abs(beta1 - beta2) * static_cast<double>(I.width()) > 1.0 + 1e-12)
    throw ValidationError("est_ratio: |beta1-beta2| * interval width must be <= 1");
  const std::uint64_t s = heavy_sample_count(h_param, delta);
  auto hit_fraction = [&](double beta, std::uint64_t count) {
    const auto counts = sampler.draw_energy_counts(beta, count);
    return static_cast<double>(interval_hits(counts, I)) / static_cast<double>(count);
  };
  double u1 = hit_fraction(beta1, s);
  double u2 = hit_fraction(beta2, s);
  if (u2 == 0.0) {
    u2 = hit_fraction(beta2, 2 * s);  // one retry with doubled samples
    if (u2 == 0.0)
      throw PipelineError("est_ratio: interval mass vanished at target temperature");
    u1 = hit_fraction(beta1, 2 * s);
  }
  return (u1 / u2) * std::exp(static_cast<double>(I.lo) * (beta1 - beta2));
}

std::size_t find_heavy(const IntervalPartition& P, const std::set<std::size_t>& forbidden,
                       double beta, double h_param, double delta, GibbsSampler& sampler) {
  if (forbidden.size() >= P.intervals.size())
    throw PipelineError("find_heavy: every interval is forbidden");
  const std::uint64_t s = heavy_sample_count(h_param, delta);
  const auto counts = sampler.draw_energy_counts(beta, s);
  bool found = false;
  std::size_t best = 0;
  std::uint64_t best_hits = 0;
  for (std::size_t i = 0; i < P.intervals.size(); ++i) {
    if (forbidden.count(i)) continue;
    const std::uint64_t hits = interval_hits(counts, P.intervals[i]);
    if (!found || hits > best_hits) {  // ties keep the lowest index
      found = true;
      best = i;
      best_hits = hits;
    }
  }
  return best;
}

SearchResult binary_search(const std::function<bool(double)>& predicate, double lo, double hi,
                           double alpha, bool check_left) {
  if (!(alpha > 0.0)) throw ValidationError("binary_search: alpha must be positive");
  if (!(lo <= hi)) throw ValidationError("binary_search: need lo <= hi");
  SearchResult result;
  auto eval = [&](double x) {
    const bool v = predicate(x);
    result.evaluations.push_back({x, v});
    return v;
  };
  if (check_left && !eval(lo))
    throw ValidationError("binary_search: predicate false at left endpoint");
  if (eval(hi)) {
    result.location = hi;
    return result;
  }
  double lambda = lo, rho = hi;
  while (rho - lambda > alpha) {
    const double mid = 0.5 * (lambda + rho);
    if (eval(mid)) {
      lambda = mid;
    } else {
      rho = mid;
    }
  }
  result.location = lambda;
  return result;
}

namespace {

constexpr double kClassicalC2 = 2.0e5;
constexpr double kVarianceThreshold = 1500.0;

struct StepContext {
  const EnergyInterval interval;
  const double beta_k;
  const std::uint64_t s;
  GibbsSampler& sampler;
  std::map<double, double> u_cache;  // temperature -> empirical mass of interval

  double hit_fraction(double beta) {
    auto it = u_cache.find(beta);
    if (it != u_cache.end()) return it->second;
    const auto counts = sampler.draw_energy_counts(beta, s);
    const double u = static_cast<double>(interval_hits(counts, interval)) /
                     static_cast<double>(s);
    return u_cache.emplace(beta, u).first->second;
  }

  // Redraw with doubled samples when a denominator came up empty.
  double refreshed_hit_fraction(double beta) {
    const auto counts = sampler.draw_energy_counts(beta, 2 * s);
    const double u = static_cast<double>(interval_hits(counts, interval)) /
                     static_cast<double>(2 * s);
    u_cache[beta] = u;
    return u;
  }

  // Sampled proxy for the slowly-varying ratio Z(beta_k)Z(x)/Z(mid)^2: the
  // two half-step ratio estimates share the midpoint mass, so their product
  // reduces to U(mid)^2 / (U(beta_k) U(x)) with the interval-offset
  // exponentials cancelling exactly.
  bool variance_ok(double x) {
    if (x == beta_k) return true;  // shared counts give exactly 1
    const double mid = 0.5 * (beta_k + x);
    double u_base = hit_fraction(beta_k);
    double u_x = hit_fraction(x);
    const double u_mid = hit_fraction(mid);
    if (u_base == 0.0) {
      u_base = refreshed_hit_fraction(beta_k);
      if (u_base == 0.0)
        throw PipelineError("schedule: heavy interval mass vanished at current temperature");
    }
    if (u_x == 0.0) {
      u_x = refreshed_hit_fraction(x);
      if (u_x == 0.0) return false;  // no observable mass that far: do not advance there
    }
    const double proxy = (u_mid * u_mid) / (u_base * u_x);
    return proxy <= kVarianceThreshold;
  }
};

}  // namespace

CoolingSchedule generate_schedule_classical(const Hamiltonian& h, double beta_min,
                                            double beta_max, double delta,
                                            GibbsSampler& sampler) {
  check_assumption_gates(h);
  if (std::isnan(beta_min) || std::isnan(beta_max) || beta_min < 0.0 || beta_max < beta_min)
    throw ValidationError("schedule: need 0 <= beta_min <= beta_max");
  if (!(delta > 0.0) || delta >= 1.0)
    throw ValidationError("schedule: delta must be in (0,1)");

  CoolingSchedule sched;
  sched.c2_target = kClassicalC2;
  sched.seed = sampler.config().seed;
  sched.betas.push_back(beta_min);
  if (beta_min == beta_max) return sched;

  const double q = h.q();
  const int n = h.max_energy();
  const double lnn = std::log(static_cast<double>(n));
  const double beta_cap = std::min(beta_max, q);
  const double alpha = 1.0 / (2.0 * static_cast<double>(n));

  const IntervalPartition partition = build_partition(n, q);
  const double h_param = 1.0 / (8.0 * static_cast<double>(partition.intervals.size()));
  // Failure budget split across every stochastic test of the run.
  const double budget_terms =
      88.0 * std::sqrt(q) * lnn * (std::max(std::log(beta_cap), 0.0) + lnn);
  const double delta_step = delta / std::max(budget_terms, 1.0);
  const std::uint64_t s = heavy_sample_count(h_param, delta_step);

  const std::size_t max_moves =
      static_cast<std::size_t>(std::ceil(11.0 * std::sqrt(q) * lnn)) + 2;
  std::set<std::size_t> forbidden;
  int consecutive_stalls = 0;

  while (sched.betas.back() < beta_cap - 1e-12) {
    if (sched.moves.size() > max_moves) {
      std::ostringstream msg;
      msg << "schedule: exceeded move budget " << max_moves << " at beta "
          << sched.betas.back();
      throw PipelineError(msg.str());
    }
    const double beta_k = sched.betas.back();
    const std::size_t heavy_idx =
        find_heavy(partition, forbidden, beta_k, h_param, delta_step, sampler);
    const EnergyInterval interval = partition.intervals[heavy_idx];

    const double step_limit =
        interval.width() == 0
            ? beta_cap
            : std::min(beta_k + 1.0 / static_cast<double>(interval.width()), beta_cap);

    std::map<double, bool> heavy_memo;
    auto heavy_pred = [&](double x) {
      auto it = heavy_memo.find(x);
      if (it != heavy_memo.end()) return it->second;
      const bool v = is_heavy(interval, x, h_param, delta_step, sampler);
      return heavy_memo.emplace(x, v).first->second;
    };
    const double heavy_limit = binary_search(heavy_pred, beta_k, step_limit, alpha).location;

    StepContext ctx{interval, beta_k, s, sampler, {}};
    std::map<double, bool> variance_memo;
    auto variance_pred = [&](double x) {
      auto it = variance_memo.find(x);
      if (it != variance_memo.end()) return it->second;
      const bool v = ctx.variance_ok(x);
      return variance_memo.emplace(x, v).first->second;
    };
    const double beta_next = binary_search(variance_pred, beta_k, heavy_limit, alpha).location;

    MoveTag tag;
    if (beta_next == step_limit) {
      tag = MoveTag::long_move;
    } else if (beta_next == heavy_limit) {
      tag = MoveTag::forbidden_capped;
      forbidden.insert(heavy_idx);
    } else {
      tag = MoveTag::variance_capped;
    }

    sched.moves.push_back({tag, interval});
    if (beta_next > beta_k) {
      sched.betas.push_back(beta_next);
      consecutive_stalls = 0;
    } else if (tag != MoveTag::forbidden_capped) {
      // No progress and nothing forbidden: the sampled predicates are
      // contradicting themselves. Tolerate a couple of unlucky draws.
      if (++consecutive_stalls > 2)
        throw PipelineError("schedule: stalled without forbidding an interval");
    }
  }

  if (beta_max > beta_cap) {
    // Extension move past the clamp point; the remaining ratio is at most
    // Z(q)/Z(inf) <= 2, within every slowly-varying target.
    sched.betas.push_back(beta_max);
    sched.moves.push_back({MoveTag::long_move, {0, 0}});
  }
  return sched;
}

nlohmann::json ScheduleVerification::to_json() const {
  return {{"length", length},
          {"long_moves", long_moves},
          {"min_ratio", min_ratio},
          {"max_ratio", max_ratio},
          {"violations", violations},
          {"c1", c1},
          {"c2", c2},
          {"quantum_length_bound", quantum_length_bound},
          {"classical_length_bound", classical_length_bound},
          {"long_move_bound", long_move_bound},
          {"ok", ok()}};
}

ScheduleVerification verify_schedule(const Hamiltonian& h, const CoolingSchedule& schedule,
                                     double c1, double c2, std::uint64_t cap) {
  if (schedule.betas.empty()) throw ValidationError("verify_schedule: empty schedule");
  if (!(c2 > 0.0)) throw ValidationError("verify_schedule: c2 must be positive");
  ScheduleVerification v;
  v.length = schedule.length();
  v.c1 = c1;
  v.c2 = c2;
  for (const Move& m : schedule.moves) {
    if (m.tag == MoveTag::long_move) ++v.long_moves;
  }
  const double q = h.q();
  const double lnn = std::log(static_cast<double>(h.max_energy()));
  v.quantum_length_bound = std::sqrt(q * lnn);
  v.classical_length_bound = 11.0 * std::sqrt(q) * lnn;
  v.long_move_bound = 6.0 * std::sqrt(q) * lnn;

  for (std::size_t i = 0; i + 1 < schedule.betas.size(); ++i) {
    const double b0 = schedule.betas[i];
    const double b1 = schedule.betas[i + 1];
    const double mid = std::isinf(b1) ? b1 : 0.5 * (b0 + b1);
    const double log_ratio = exact_log_partition(h, b0, cap) + exact_log_partition(h, b1, cap) -
                             2.0 * exact_log_partition(h, mid, cap);
    const double ratio = std::exp(log_ratio);
    v.min_ratio = std::min(v.min_ratio, ratio);
    v.max_ratio = std::max(v.max_ratio, ratio);
    if (ratio > c2 * (1.0 + 1e-12) || (c1 > 0.0 && ratio < c1 * (1.0 - 1e-12))) ++v.violations;
  }
  if (schedule.betas.size() < 2) v.min_ratio = v.max_ratio = 1.0;
  return v;
}

}  // namespace gibbsum
