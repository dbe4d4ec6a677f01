// Adaptive cooling schedules. The generator walks inverse temperature from
// beta_min toward beta_max, at each step locating a heavy energy interval
// and advancing as far as a sampled variance proxy allows, so consecutive
// distributions stay slowly varying without prior knowledge of Z.
#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbsum/common.hpp"
#include "gibbsum/models.hpp"
#include "gibbsum/sampling.hpp"

namespace gibbsum {

// Inclusive energy range {lo, ..., hi}.
struct EnergyInterval {
  int lo = 0;
  int hi = 0;
  int width() const { return hi - lo; }
  bool contains(int e) const { return e >= lo && e <= hi; }
};

struct IntervalPartition {
  std::vector<EnergyInterval> intervals;
};

// Geometric partition of {0,...,n}: interval starting at b has width
// floor(b/sqrt(q)), clipped at n. Size is O(sqrt(q) log n).
IntervalPartition build_partition(int n, double q);

enum class MoveTag {
  long_move,         // advanced the full per-step temperature budget
  forbidden_capped,  // heaviness ran out; interval added to the forbidden set
  variance_capped,   // the variance proxy hit its threshold
};
std::string to_string(MoveTag tag);
MoveTag move_tag_from_string(const std::string& s);

struct Move {
  MoveTag tag;
  EnergyInterval interval;
};

struct CoolingSchedule {
  std::vector<double> betas;  // nondecreasing; last entry may be +infinity
  std::vector<Move> moves;    // one per consecutive beta pair
  double c2_target = 0.0;     // slowly-varying constant the generator aims for
  std::uint64_t seed = 0;

  std::size_t length() const { return betas.empty() ? 0 : betas.size() - 1; }
  nlohmann::json to_json() const;
  static CoolingSchedule from_json(const nlohmann::json& spec);
};

// Entry requirements shared by schedule generators and estimators:
// ln n >= 1, ln q >= 1, |Omega| >= ln n. Throws ValidationError.
void check_assumption_gates(const Hamiltonian& h);

// Number of samples used by the heaviness tests below.
std::uint64_t heavy_sample_count(double h_param, double delta);

// Draws s = ceil((8/h) ln(1/delta)) samples and reports whether the
// empirical mass of I reaches 2h. For an interval of true mass >= 4h the
// answer is true with probability >= 1-delta; for true mass < h it is false
// with probability >= 1-delta.
bool is_heavy(const EnergyInterval& I, double beta, double h_param, double delta,
              GibbsSampler& sampler);

// Estimate of Z(beta2)/Z(beta1) through the interval's empirical masses:
// (U1/U2) e^{lo (beta1-beta2)}. Requires |beta1-beta2| * width(I) <= 1.
// A zero denominator is retried once with doubled samples, then aborts.
double est_ratio(const EnergyInterval& I, double beta2, double beta1, double h_param,
                 double delta, GibbsSampler& sampler);

// Index into P of the most-hit non-forbidden interval after s draws
// (ties -> lowest index). Throws PipelineError if every interval is
// forbidden.
std::size_t find_heavy(const IntervalPartition& P, const std::set<std::size_t>& forbidden,
                       double beta, double h_param, double delta, GibbsSampler& sampler);

struct SearchEvaluation {
  double point;
  bool value;
};

struct SearchResult {
  double location;
  std::vector<SearchEvaluation> evaluations;
};

// Bisection for monotone predicates on [lo, hi]: returns hi immediately if
// the predicate holds there, otherwise the largest bracketed point lambda
// with P(lambda) observed-true-or-assumed (the left endpoint is assumed true
// and never evaluated unless check_left is set, in which case a false left
// endpoint raises ValidationError). Stops when the bracket is narrower than
// alpha.
SearchResult binary_search(const std::function<bool(double)>& predicate, double lo, double hi,
                           double alpha, bool check_left = false);

// Adaptive schedule targeting a 2e5-slowly-varying sequence from beta_min to
// beta_max (clamped to q = ln|Omega|, with one final extension move beyond
// the clamp when beta_max exceeds it, including beta_max = +infinity).
CoolingSchedule generate_schedule_classical(const Hamiltonian& h, double beta_min,
                                            double beta_max, double delta,
                                            GibbsSampler& sampler);

struct ScheduleVerification {
  std::size_t length = 0;
  std::size_t long_moves = 0;
  double min_ratio = kInf;  // smallest consecutive-pair ratio Z(b)Z(b')/Z(mid)^2
  double max_ratio = 0.0;
  std::size_t violations = 0;       // pairs outside [c1, c2]
  double c1 = 0.0;
  double c2 = 0.0;
  double quantum_length_bound = 0.0;    // sqrt(q ln n)
  double classical_length_bound = 0.0;  // 11 sqrt(q) ln n
  double long_move_bound = 0.0;         // 6 sqrt(q) ln n

  bool ok() const { return violations == 0; }
  nlohmann::json to_json() const;
};

// Checks every consecutive pair of the schedule against [c1, c2] using the
// enumeration oracle. c1 = 0 disables the lower check.
ScheduleVerification verify_schedule(const Hamiltonian& h, const CoolingSchedule& schedule,
                                     double c1, double c2,
                                     std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace gibbsum
