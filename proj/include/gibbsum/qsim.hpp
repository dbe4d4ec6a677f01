// Desk-scale simulation of the quantum pipeline: coherent encodings of
// Gibbs distributions (qsamples), non-destructive amplitude estimation with
// an analytic outcome-law backend and a statevector backend, restoration
// jumps by alternating projective measurements, overlap-driven schedule
// generation, and mean estimation built from amplitude estimation.
//
// Ledger conventions: reflections_invoked charges t per estimation
// repetition plus one per jump measurement; qsample_copies_consumed counts
// fresh preparations (measured copies, working copies, re-preparations
// after a failed restoration); qsample_copies_restored counts successful
// non-destructive restorations.
#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "gibbsum/common.hpp"
#include "gibbsum/estimator.hpp"
#include "gibbsum/models.hpp"
#include "gibbsum/schedule.hpp"

namespace gibbsum {

// Real non-negative amplitudes sqrt(mu_beta(x)), unit norm.
struct QSample {
  std::vector<double> amplitudes;
  double beta = 0.0;
};

QSample prepare_qsample(const Hamiltonian& h, double beta,
                        std::uint64_t cap = kDefaultEnumerationCap);

// Squared inner product of two real unit vectors.
double overlap_squared(const QSample& a, const QSample& b);

// Householder-style reflection 2|about><about| - I applied to `state`.
std::vector<double> reflect(const std::vector<double>& state, const QSample& about,
                            ResourceLedger& ledger);

struct AEBackend {
  enum class Mode { analytic, statevector };
  Mode mode = Mode::analytic;
  int phase_bits = 7;  // statevector grid size M = 2^phase_bits
  std::uint64_t sim_cap = kDefaultEnumerationCap;

  static AEBackend from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;
};

// Measurement operator for amplitude estimation: either the rank-one
// projector onto a pure state, or the diagonal projector that marks state x
// with probability f(x) in [0,1] via an ancilla rotation.
struct ProjectorSpec {
  enum class Kind { rank_one, diagonal_function };
  Kind kind = Kind::rank_one;
  std::vector<double> target_amplitudes;  // rank_one
  std::vector<double> f_values;           // diagonal_function

  static ProjectorSpec rank_one(const QSample& target);
  static ProjectorSpec diagonal(std::vector<double> f_values);

  // True amplitude p = <psi|P|psi>.
  double expectation(const QSample& psi) const;
};

// Phase-estimation outcome law for amplitude p on an M-point grid:
// P[j] = (F_M(j/M - w) + F_M(j/M + w))/2 with w = asin(sqrt(p))/pi and
// F_M the squared Dirichlet kernel. Normalized.
std::vector<double> qpe_outcome_distribution(double p, long M);

// Estimate encoded by grid outcome j: sin^2(pi j / M).
double qpe_estimate_from_outcome(long j, long M);

// Smallest odd repetition count driving the 8/pi^2 single-run success
// probability up to 1 - eta via a median.
int median_repetitions(double eta);

struct AEResult {
  double p_hat = 0.0;
  bool restored = false;
  int repetitions = 0;
};

// Median-boosted amplitude estimation on one working copy of psi.
// Guarantees |p_hat - p| <= 2 pi sqrt(p(1-p))/t + pi^2/t^2 with probability
// >= 1 - eta, and restores the copy with probability >= 1 - eta (a failed
// restoration is re-prepared and recorded in the ledger).
AEResult amplitude_estimate_nondestructive(const QSample& psi, const ProjectorSpec& projector,
                                           long t, double eta, const AEBackend& backend,
                                           RngStream& rng, ResourceLedger& ledger);

// Probability that alternating measurements fail to reach the target within
// 2k+1 measurements when the squared overlap is a: (1-a)(a^2+(1-a)^2)^k.
double jump_failure_probability(double a, int k);

struct JumpOutcome {
  bool success = false;
  int measurements = 0;
};

// Law-level simulation of the alternating-measurement walk.
JumpOutcome simulate_jump(double a, int max_rounds, RngStream& rng);

// Converts the current working copy into `target` by alternating projective
// measurements, budgeting rounds so the failure probability is at most eta.
// Requires squared overlap >= a_min. Throws PipelineError on jump failure.
QSample jump_by_measurement(const QSample& current, const QSample& target, double eta,
                            RngStream& rng, ResourceLedger& ledger, double a_min = 1.0 / 15.0);

// Overlap-driven schedule: from beta_k, advance to the largest temperature
// whose qsample keeps estimated squared overlap >= 0.075 with the current
// one (additive AE error 0.005), jumping the working copy along. Targets a
// 15-slowly-varying schedule of length <= sqrt(q ln n) up to the clamp
// point min(beta_max, q), plus one extension move beyond it.
CoolingSchedule generate_schedule_quantum(const Hamiltonian& h, double beta_min,
                                          double beta_max, double delta,
                                          const AEBackend& backend, std::uint64_t seed,
                                          ResourceLedger& ledger);

// Mean of f >= 0 under mu_beta given E[f^2] <= B, to additive error epsilon
// with probability >= 1 - eta. Splits f into dyadic level sets, estimates
// each level's amplitude, and recombines.
double quantum_mean_bounded_second_moment(const Hamiltonian& h, double beta,
                                          const std::vector<double>& f, double B,
                                          double epsilon, double eta, const AEBackend& backend,
                                          RngStream& rng, ResourceLedger& ledger);

// Mean of f >= 0 under mu_beta given relative second moment E[f^2]/E[f]^2
// <= B, to relative error epsilon with probability >= 1 - eta. Stage 1
// measures floor(16 B ln(2/eta)) copies (median of ceil(ln(2/eta)) batch
// means); stage 2 refines f/mu_tilde coherently on one working copy.
double quantum_mean_relative(const Hamiltonian& h, double beta, const std::vector<double>& f,
                             double B, double epsilon, double eta, const AEBackend& backend,
                             RngStream& rng, ResourceLedger& ledger);

// Full quantum pipeline: overlap-driven schedule (failure budget 1/10),
// then per-stage relative-error means (epsilon/(2 ell) each, failure
// 1/(20 ell), B = 15). The returned ratio is (2 epsilon)-relative with
// probability >= 4/5.
EstimateReport estimate_ratio_quantum(const Hamiltonian& h, double beta_min, double beta_max,
                                      double epsilon, const AEBackend& backend,
                                      std::uint64_t seed);

}  // namespace gibbsum
