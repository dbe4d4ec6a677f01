#include "gibbsum/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace gibbsum {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Hoeffding exponent boosting the 8/pi^2 single-run success rate.
const double kMedianExponent =
    2.0 * (8.0 / (kPi * kPi) - 0.5) * (8.0 / (kPi * kPi) - 0.5);

constexpr double kOverlapThreshold = 0.075;
constexpr double kOverlapAdditiveError = 0.005;
constexpr double kQuantumC2 = 15.0;

std::vector<double> cumulative(const std::vector<double>& probs) {
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cdf[i] = acc;
  }
  if (!cdf.empty()) cdf.back() = std::max(cdf.back(), 1.0);
  return cdf;
}

std::size_t draw_from_cdf(const std::vector<double>& cdf, RngStream& rng) {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(std::distance(cdf.begin(), it), cdf.size() - 1);
}

// Dyadic level of v: 0 for v < 1, else L with 2^{L-1} <= v < 2^L.
int dyadic_level(double v) {
  if (v < 1.0) return 0;
  int exponent = 0;
  std::frexp(v, &exponent);  // v = m 2^exponent, m in [0.5, 1)
  return exponent;
}

int restoration_round_budget(double a, double eta) {
  if (!(a > 0.0)) return 0;
  double fail = 1.0 - a;
  const double per_round = a * a + (1.0 - a) * (1.0 - a);
  int k = 0;
  while (fail > eta && k < 100000) {
    fail *= per_round;
    ++k;
  }
  return k;
}

}  // namespace

QSample prepare_qsample(const Hamiltonian& h, double beta, std::uint64_t cap) {
  const std::vector<double> p = exact_gibbs_distribution(h, beta, cap);
  QSample q;
  q.beta = beta;
  q.amplitudes.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q.amplitudes[i] = std::sqrt(p[i]);
  return q;
}

double overlap_squared(const QSample& a, const QSample& b) {
  if (a.amplitudes.size() != b.amplitudes.size())
    throw ValidationError("overlap_squared: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.amplitudes.size(); ++i) s += a.amplitudes[i] * b.amplitudes[i];
  return s * s;
}

std::vector<double> reflect(const std::vector<double>& state, const QSample& about,
                            ResourceLedger& ledger) {
  if (state.size() != about.amplitudes.size())
    throw ValidationError("reflect: dimension mismatch");
  ++ledger.reflections_invoked;
  double inner = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) inner += state[i] * about.amplitudes[i];
  std::vector<double> out(state.size());
  for (std::size_t i = 0; i < state.size(); ++i)
    out[i] = 2.0 * inner * about.amplitudes[i] - state[i];
  return out;
}

AEBackend AEBackend::from_json(const nlohmann::json& spec) {
  AEBackend b;
  if (spec.is_null()) return b;
  if (!spec.is_object()) throw ValidationError("ae: expected a JSON object");
  if (spec.contains("mode")) {
    const std::string mode = spec["mode"].get<std::string>();
    if (mode == "analytic") {
      b.mode = Mode::analytic;
    } else if (mode == "statevector") {
      b.mode = Mode::statevector;
    } else {
      throw ValidationError("ae: mode must be 'analytic' or 'statevector'");
    }
  }
  if (spec.contains("phase_bits")) b.phase_bits = spec["phase_bits"].get<int>();
  if (b.phase_bits < 1 || b.phase_bits > 24)
    throw ValidationError("ae: phase_bits must be in [1, 24]");
  return b;
}

nlohmann::json AEBackend::to_json() const {
  return {{"mode", mode == Mode::analytic ? "analytic" : "statevector"},
          {"phase_bits", phase_bits}};
}

ProjectorSpec ProjectorSpec::rank_one(const QSample& target) {
  ProjectorSpec p;
  p.kind = Kind::rank_one;
  p.target_amplitudes = target.amplitudes;
  return p;
}

ProjectorSpec ProjectorSpec::diagonal(std::vector<double> f_values) {
  ProjectorSpec p;
  p.kind = Kind::diagonal_function;
  for (double& v : f_values) {
    if (std::isnan(v) || v < -1e-9 || v > 1.0 + 1e-9)
      throw ValidationError("projector: diagonal values must lie in [0,1]");
    v = std::clamp(v, 0.0, 1.0);
  }
  p.f_values = std::move(f_values);
  return p;
}

double ProjectorSpec::expectation(const QSample& psi) const {
  if (kind == Kind::rank_one) {
    if (target_amplitudes.size() != psi.amplitudes.size())
      throw ValidationError("projector: dimension mismatch");
    double inner = 0.0;
    for (std::size_t i = 0; i < psi.amplitudes.size(); ++i)
      inner += psi.amplitudes[i] * target_amplitudes[i];
    return std::clamp(inner * inner, 0.0, 1.0);
  }
  if (f_values.size() != psi.amplitudes.size())
    throw ValidationError("projector: dimension mismatch");
  double p = 0.0;
  for (std::size_t i = 0; i < psi.amplitudes.size(); ++i)
    p += psi.amplitudes[i] * psi.amplitudes[i] * f_values[i];
  return std::clamp(p, 0.0, 1.0);
}

namespace {

// Squared Dirichlet kernel sin^2(pi M y) / (M sin(pi y))^2, period 1.
double dirichlet_kernel_sq(double x, long M) {
  double y = x - std::floor(x);
  if (y < 1e-14 || 1.0 - y < 1e-14) return 1.0;
  const double s = std::sin(kPi * y);
  const double n = std::sin(kPi * static_cast<double>(M) * y);
  const double v = n / (static_cast<double>(M) * s);
  return v * v;
}

}  // namespace

std::vector<double> qpe_outcome_distribution(double p, long M) {
  if (M < 2) throw ValidationError("qpe_outcome_distribution: M must be >= 2");
  p = std::clamp(p, 0.0, 1.0);
  const double omega = std::asin(std::sqrt(p)) / kPi;
  std::vector<double> dist(static_cast<std::size_t>(M));
  double total = 0.0;
  for (long j = 0; j < M; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(M);
    dist[j] = 0.5 * (dirichlet_kernel_sq(x - omega, M) + dirichlet_kernel_sq(x + omega, M));
    total += dist[j];
  }
  for (double& v : dist) v /= total;
  return dist;
}

double qpe_estimate_from_outcome(long j, long M) {
  const double s = std::sin(kPi * static_cast<double>(j) / static_cast<double>(M));
  return s * s;
}

int median_repetitions(double eta) {
  if (!(eta > 0.0) || eta >= 1.0)
    throw ValidationError("median_repetitions: eta must be in (0,1)");
  int r = static_cast<int>(std::ceil(std::log(1.0 / eta) / kMedianExponent));
  if (r < 1) r = 1;
  if (r % 2 == 0) ++r;
  return r;
}

namespace {

// Statevector quantum phase estimation of the Grover iterate
// G = (2|psi><psi| - I)(I - 2P). Both factors are real, so the register
// state splits into cosine and sine parts over the M-point grid.
struct StatevectorLaw {
  long M = 0;
  std::size_t dim = 0;
  std::vector<double> psi_vec;
  std::vector<double> powers;  // row m holds G^m psi_vec
  std::vector<double> probs;
};

void apply_grover(const ProjectorSpec& proj, const std::vector<double>& psi_vec,
                  std::vector<double>& v) {
  // I - 2P
  if (proj.kind == ProjectorSpec::Kind::rank_one) {
    double inner = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) inner += proj.target_amplitudes[i] * v[i];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= 2.0 * inner * proj.target_amplitudes[i];
  } else {
    for (std::size_t i = 1; i < v.size(); i += 2) v[i] = -v[i];  // marked ancilla branch
  }
  // 2|psi><psi| - I
  double inner = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) inner += psi_vec[i] * v[i];
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 2.0 * inner * psi_vec[i] - v[i];
}

StatevectorLaw build_statevector_law(const QSample& psi, const ProjectorSpec& proj,
                                     const AEBackend& backend) {
  StatevectorLaw law;
  law.M = 1L << backend.phase_bits;
  const std::size_t n = psi.amplitudes.size();
  const bool diagonal = proj.kind == ProjectorSpec::Kind::diagonal_function;
  law.dim = diagonal ? 2 * n : n;
  if (static_cast<std::uint64_t>(law.dim) * static_cast<std::uint64_t>(law.M) > backend.sim_cap)
    throw PipelineError("statevector backend: register exceeds simulation cap");

  law.psi_vec.resize(law.dim);
  if (diagonal) {
    if (proj.f_values.size() != n) throw ValidationError("projector: dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      law.psi_vec[2 * i] = psi.amplitudes[i] * std::sqrt(1.0 - proj.f_values[i]);
      law.psi_vec[2 * i + 1] = psi.amplitudes[i] * std::sqrt(proj.f_values[i]);
    }
  } else {
    if (proj.target_amplitudes.size() != n) throw ValidationError("projector: dimension mismatch");
    law.psi_vec = psi.amplitudes;
  }

  ProjectorSpec extended = proj;
  law.powers.assign(static_cast<std::size_t>(law.M) * law.dim, 0.0);
  std::vector<double> v = law.psi_vec;
  for (long m = 0; m < law.M; ++m) {
    std::copy(v.begin(), v.end(), law.powers.begin() + m * static_cast<long>(law.dim));
    if (m + 1 < law.M) apply_grover(extended, law.psi_vec, v);
  }

  law.probs.assign(static_cast<std::size_t>(law.M), 0.0);
  std::vector<double> u(law.dim), w(law.dim);
  double total = 0.0;
  for (long j = 0; j < law.M; ++j) {
    std::fill(u.begin(), u.end(), 0.0);
    std::fill(w.begin(), w.end(), 0.0);
    for (long m = 0; m < law.M; ++m) {
      const double angle = 2.0 * kPi * static_cast<double>(j) * static_cast<double>(m) /
                           static_cast<double>(law.M);
      const double c = std::cos(angle), s = std::sin(angle);
      const double* row = law.powers.data() + m * static_cast<long>(law.dim);
      for (std::size_t i = 0; i < law.dim; ++i) {
        u[i] += c * row[i];
        w[i] -= s * row[i];
      }
    }
    double norm2 = 0.0;
    for (std::size_t i = 0; i < law.dim; ++i) norm2 += u[i] * u[i] + w[i] * w[i];
    law.probs[j] = norm2 / (static_cast<double>(law.M) * static_cast<double>(law.M));
    total += law.probs[j];
  }
  for (double& v2 : law.probs) v2 /= total;
  return law;
}

// Fidelity of the post-measurement state for outcome j with the prepared
// state; drives the restoration measurements.
double statevector_restore_overlap(const StatevectorLaw& law, long j) {
  std::vector<double> u(law.dim, 0.0), w(law.dim, 0.0);
  for (long m = 0; m < law.M; ++m) {
    const double angle = 2.0 * kPi * static_cast<double>(j) * static_cast<double>(m) /
                         static_cast<double>(law.M);
    const double c = std::cos(angle), s = std::sin(angle);
    const double* row = law.powers.data() + m * static_cast<long>(law.dim);
    for (std::size_t i = 0; i < law.dim; ++i) {
      u[i] += c * row[i];
      w[i] -= s * row[i];
    }
  }
  double norm2 = 0.0, pu = 0.0, pw = 0.0;
  for (std::size_t i = 0; i < law.dim; ++i) {
    norm2 += u[i] * u[i] + w[i] * w[i];
    pu += law.psi_vec[i] * u[i];
    pw += law.psi_vec[i] * w[i];
  }
  if (norm2 <= 0.0) return 0.0;
  return (pu * pu + pw * pw) / norm2;
}

}  // namespace

AEResult amplitude_estimate_nondestructive(const QSample& psi, const ProjectorSpec& projector,
                                           long t, double eta, const AEBackend& backend,
                                           RngStream& rng, ResourceLedger& ledger) {
  if (t < 2) throw ValidationError("amplitude_estimate: t must be >= 2");
  if (!(eta > 0.0) || eta >= 1.0) throw ValidationError("amplitude_estimate: eta in (0,1)");

  const int r = median_repetitions(eta);
  std::vector<double> estimates(static_cast<std::size_t>(r));
  double restore_overlap = 1.0 - eta;  // analytic backend restores with prob 1-eta
  const bool statevector = backend.mode == AEBackend::Mode::statevector;

  if (statevector) {
    const StatevectorLaw law = build_statevector_law(psi, projector, backend);
    const std::vector<double> cdf = cumulative(law.probs);
    long last_outcome = 0;
    for (int rep = 0; rep < r; ++rep) {
      last_outcome = static_cast<long>(draw_from_cdf(cdf, rng));
      estimates[rep] = qpe_estimate_from_outcome(last_outcome, law.M);
    }
    restore_overlap = statevector_restore_overlap(law, last_outcome);
  } else {
    const double p = projector.expectation(psi);
    const std::vector<double> dist = qpe_outcome_distribution(p, t);
    const std::vector<double> cdf = cumulative(dist);
    for (int rep = 0; rep < r; ++rep) {
      const long j = static_cast<long>(draw_from_cdf(cdf, rng));
      estimates[rep] = qpe_estimate_from_outcome(j, t);
    }
  }

  std::sort(estimates.begin(), estimates.end());
  AEResult result;
  result.p_hat = estimates[static_cast<std::size_t>(r) / 2];
  result.repetitions = r;
  ledger.reflections_invoked += static_cast<std::uint64_t>(t) * static_cast<std::uint64_t>(r);

  if (statevector) {
    const int budget = restoration_round_budget(restore_overlap, eta);
    result.restored = simulate_jump(restore_overlap, budget, rng).success;
  } else {
    result.restored = rng.bernoulli(1.0 - eta);
  }
  if (result.restored) {
    ++ledger.qsample_copies_restored;
  } else {
    ++ledger.qsample_repreparations;  // working copy rebuilt from scratch
    ++ledger.qsample_copies_consumed;
  }
  return result;
}

double jump_failure_probability(double a, int k) {
  if (std::isnan(a) || a < 0.0 || a > 1.0)
    throw ValidationError("jump_failure_probability: a must be in [0,1]");
  if (k < 0) throw ValidationError("jump_failure_probability: k must be >= 0");
  return (1.0 - a) * std::pow(a * a + (1.0 - a) * (1.0 - a), k);
}

JumpOutcome simulate_jump(double a, int max_rounds, RngStream& rng) {
  JumpOutcome out;
  out.measurements = 1;
  if (rng.bernoulli(a)) {
    out.success = true;
    return out;
  }
  // Failed target measurements always leave the orthogonal component, so
  // rounds are independent: pass through the current-state basis, then try
  // the target again.
  for (int round = 0; round < max_rounds; ++round) {
    const bool via_current = rng.bernoulli(1.0 - a);
    const double p_success = via_current ? a : 1.0 - a;
    out.measurements += 2;
    if (rng.bernoulli(p_success)) {
      out.success = true;
      return out;
    }
  }
  return out;
}

QSample jump_by_measurement(const QSample& current, const QSample& target, double eta,
                            RngStream& rng, ResourceLedger& ledger, double a_min) {
  if (!(eta > 0.0) || eta >= 1.0) throw ValidationError("jump: eta must be in (0,1)");
  const double a = overlap_squared(current, target);
  if (a < a_min - 1e-12)
    throw ValidationError("jump: squared overlap below the minimum for reliable transfer");
  const int budget = restoration_round_budget(a, eta);
  const JumpOutcome out = simulate_jump(a, budget, rng);
  ledger.reflections_invoked += static_cast<std::uint64_t>(out.measurements);
  if (!out.success)
    throw PipelineError("jump failure: target state not reached within measurement budget");
  return target;
}

CoolingSchedule generate_schedule_quantum(const Hamiltonian& h, double beta_min,
                                          double beta_max, double delta,
                                          const AEBackend& backend, std::uint64_t seed,
                                          ResourceLedger& ledger) {
  check_assumption_gates(h);
  if (std::isnan(beta_min) || std::isnan(beta_max) || beta_min < 0.0 || beta_max < beta_min)
    throw ValidationError("schedule: need 0 <= beta_min <= beta_max");
  if (!(delta > 0.0) || delta >= 1.0) throw ValidationError("schedule: delta must be in (0,1)");

  CoolingSchedule sched;
  sched.c2_target = kQuantumC2;
  sched.seed = seed;
  sched.betas.push_back(beta_min);
  if (beta_min == beta_max || std::isinf(beta_min)) return sched;

  const double q = h.q();
  const int n = h.max_energy();
  const double lnn = std::log(static_cast<double>(n));
  const double beta_cap = std::min(beta_max, q);
  const double alpha = 1.0 / (2.0 * static_cast<double>(n));

  long t = static_cast<long>(std::ceil(kPi / kOverlapAdditiveError));
  while (kPi / static_cast<double>(t) + kPi * kPi / (static_cast<double>(t) * static_cast<double>(t)) >
         kOverlapAdditiveError)
    ++t;

  const double budget_terms =
      4.0 * std::sqrt(q * lnn) * (std::max(std::log(beta_cap), 0.0) + lnn);
  const double eta_event = delta / std::max(budget_terms, 1.0);

  const std::size_t max_steps = static_cast<std::size_t>(std::floor(std::sqrt(q * lnn)));
  RngStream rng(seed, "quantum-schedule");

  QSample psi = prepare_qsample(h, beta_min);
  ++ledger.qsample_copies_consumed;  // initial working copy

  while (sched.betas.back() < beta_cap - 1e-12) {
    if (sched.moves.size() >= max_steps) {
      std::ostringstream msg;
      msg << "quantum schedule: exceeded step budget " << max_steps << " before reaching "
          << beta_cap << " (reached " << sched.betas.back() << ")";
      throw PipelineError(msg.str());
    }
    const double beta_k = sched.betas.back();
    std::map<double, bool> memo;
    auto overlap_pred = [&](double x) {
      auto it = memo.find(x);
      if (it != memo.end()) return it->second;
      const QSample candidate = prepare_qsample(h, x);
      const ProjectorSpec proj = ProjectorSpec::rank_one(candidate);
      const AEResult res =
          amplitude_estimate_nondestructive(psi, proj, t, eta_event, backend, rng, ledger);
      const bool v = res.p_hat >= kOverlapThreshold;
      return memo.emplace(x, v).first->second;
    };
    const double beta_next = binary_search(overlap_pred, beta_k, beta_cap, alpha).location;
    if (!(beta_next > beta_k))
      throw PipelineError("quantum schedule: estimated overlap collapsed at the current point");

    const QSample target = prepare_qsample(h, beta_next);
    psi = jump_by_measurement(psi, target, eta_event, rng, ledger);
    sched.betas.push_back(beta_next);
    sched.moves.push_back({beta_next == beta_cap ? MoveTag::long_move : MoveTag::variance_capped,
                           {0, n}});
  }

  if (beta_max > beta_cap) {
    const QSample target = prepare_qsample(h, beta_max);
    psi = jump_by_measurement(psi, target, eta_event, rng, ledger);
    sched.betas.push_back(beta_max);
    sched.moves.push_back({MoveTag::long_move, {0, 0}});
  }
  return sched;
}

double quantum_mean_bounded_second_moment(const Hamiltonian& h, double beta,
                                          const std::vector<double>& f, double B,
                                          double epsilon, double eta, const AEBackend& backend,
                                          RngStream& rng, ResourceLedger& ledger) {
  if (!(B >= 1.0)) throw ValidationError("quantum mean: B must be >= 1");
  if (!(epsilon > 0.0)) throw ValidationError("quantum mean: epsilon must be positive");
  if (!(eta > 0.0) || eta >= 1.0) throw ValidationError("quantum mean: eta must be in (0,1)");
  if (f.size() != h.state_count()) throw ValidationError("quantum mean: f has wrong dimension");
  for (double v : f) {
    if (std::isnan(v) || std::isinf(v) || v < 0.0)
      throw ValidationError("quantum mean: f must be finite and non-negative");
  }

  // Dyadic level count: the dropped tail above 2^k must cost at most eps/2.
  int k = static_cast<int>(std::ceil(std::log(2.0 * B / epsilon)));
  if (k < 0) k = 0;
  while (B / std::pow(2.0, k) > epsilon / 2.0) ++k;

  const double root_b = std::sqrt(B);
  const double log_term = std::log(2.0 * B / epsilon);
  long t = static_cast<long>(std::ceil(std::max(
      4.0 * kPi * root_b / epsilon,
      8.0 * kPi * (root_b * std::sqrt(std::max(log_term, 0.0)) + 1.0) / epsilon)));
  // Quadratic phase-estimation term must keep its eps/4 share across levels.
  while (kPi * kPi * std::pow(2.0, k + 1) / (static_cast<double>(t) * static_cast<double>(t)) >
         epsilon / 4.0)
    ++t;

  const double eta_level = eta / static_cast<double>(k + 1);
  const QSample psi = prepare_qsample(h, beta);

  double mu_hat = 0.0;
  std::vector<double> f_level(f.size());
  for (int lev = 0; lev <= k; ++lev) {
    const double scale = std::pow(2.0, lev);
    for (std::size_t i = 0; i < f.size(); ++i) {
      f_level[i] = dyadic_level(f[i]) == lev ? f[i] / scale : 0.0;
    }
    const ProjectorSpec proj = ProjectorSpec::diagonal(f_level);
    const AEResult res =
        amplitude_estimate_nondestructive(psi, proj, t, eta_level, backend, rng, ledger);
    mu_hat += scale * res.p_hat;
  }
  return mu_hat;
}

double quantum_mean_relative(const Hamiltonian& h, double beta, const std::vector<double>& f,
                             double B, double epsilon, double eta, const AEBackend& backend,
                             RngStream& rng, ResourceLedger& ledger) {
  if (!(B >= 1.0)) throw ValidationError("quantum mean: B must be >= 1");
  if (!(epsilon > 0.0) || epsilon >= 1.0)
    throw ValidationError("quantum mean: epsilon must be in (0,1)");
  if (!(eta > 0.0) || eta >= 1.0) throw ValidationError("quantum mean: eta must be in (0,1)");
  if (f.size() != h.state_count()) throw ValidationError("quantum mean: f has wrong dimension");

  // Stage 1: crude estimate from measured copies, median of batch means.
  const double ln_term = std::log(2.0 / eta);
  const int batches = static_cast<int>(std::ceil(ln_term));
  const std::uint64_t total = static_cast<std::uint64_t>(std::floor(16.0 * B * ln_term));
  ledger.qsample_copies_consumed += total;

  const std::vector<double> p = exact_gibbs_distribution(h, beta);
  const std::vector<double> cdf = cumulative(p);
  std::vector<double> batch_means(static_cast<std::size_t>(batches), 0.0);
  const std::uint64_t base = total / static_cast<std::uint64_t>(batches);
  const std::uint64_t extra = total % static_cast<std::uint64_t>(batches);
  for (int b = 0; b < batches; ++b) {
    const std::uint64_t size = base + (static_cast<std::uint64_t>(b) < extra ? 1 : 0);
    double sum = 0.0;
    for (std::uint64_t i = 0; i < size; ++i) sum += f[draw_from_cdf(cdf, rng)];
    batch_means[b] = size > 0 ? sum / static_cast<double>(size) : 0.0;
  }
  std::sort(batch_means.begin(), batch_means.end());
  const double mu_tilde =
      batches % 2 == 1
          ? batch_means[batches / 2]
          : 0.5 * (batch_means[batches / 2 - 1] + batch_means[batches / 2]);
  if (!(mu_tilde > 0.0))
    throw PipelineError("degenerate mean: crude estimation stage measured only zeros");

  // Stage 2: coherent refinement of f / mu_tilde on one working copy. The
  // rescaled function has second moment at most 4B when mu_tilde is within
  // a factor 2 of the truth.
  ++ledger.qsample_copies_consumed;
  std::vector<double> f_res(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) f_res[i] = f[i] / mu_tilde;
  const double mu_res = quantum_mean_bounded_second_moment(
      h, beta, f_res, 4.0 * B, epsilon / 2.0, eta / 2.0, backend, rng, ledger);
  return mu_tilde * mu_res;
}

EstimateReport estimate_ratio_quantum(const Hamiltonian& h, double beta_min, double beta_max,
                                      double epsilon, const AEBackend& backend,
                                      std::uint64_t seed) {
  check_assumption_gates(h);
  if (!(epsilon > 0.0) || epsilon >= 1.0)
    throw ValidationError("estimate_ratio_quantum: epsilon must be in (0,1)");

  EstimateReport report;
  report.epsilon_target = epsilon;
  report.eta_target = 0.2;  // 1/10 schedule + 2 ell * 1/(20 ell) estimation

  ResourceLedger ledger;
  report.schedule = generate_schedule_quantum(h, beta_min, beta_max, 0.1, backend, seed, ledger);
  report.schedule_length = report.schedule.length();

  const PairedSampleSpec spec = PairedSampleSpec::from_schedule(report.schedule);
  if (spec.stages.empty()) {
    report.log_q_hat = 0.0;
    report.ledger = ledger;
    return report;
  }

  const std::size_t ell = spec.stages.size();
  const double eps_stage = epsilon / (2.0 * static_cast<double>(ell));
  const double eta_stage = 1.0 / (20.0 * static_cast<double>(ell));
  const double stage_b = kQuantumC2;
  const std::uint64_t measured_per_mean =
      static_cast<std::uint64_t>(std::floor(16.0 * stage_b * std::log(2.0 / eta_stage)));

  const Enumeration& en = enumerate_states(h);
  RngStream est_rng(seed, "quantum-estimate");

  double log_q = 0.0;
  for (const StageGeometry& g : spec.stages) {
    std::vector<double> f_v(en.energies.size()), f_w(en.energies.size());
    for (std::size_t x = 0; x < en.energies.size(); ++x) {
      const int e = en.energies[x];
      if (std::isinf(g.d)) {
        // Extension stage: V is the ground-state indicator; W is constant 1
        // on the support of mu_infinity.
        f_v[x] = e == 0 ? 1.0 : 0.0;
        f_w[x] = e == 0 ? 1.0 : 0.0;
      } else {
        f_v[x] = std::exp(-g.d * static_cast<double>(e));
        f_w[x] = std::exp(g.d * static_cast<double>(e));
      }
    }
    const double v_hat = quantum_mean_relative(h, g.beta_lo, f_v, stage_b, eps_stage, eta_stage,
                                               backend, est_rng, ledger);
    const double w_hat = quantum_mean_relative(h, g.beta_hi, f_w, stage_b, eps_stage, eta_stage,
                                               backend, est_rng, ledger);

    StageDiagnostic diag;
    diag.beta_lo = g.beta_lo;
    diag.beta_hi = g.beta_hi;
    diag.d = g.d;
    diag.log_mean_v = std::log(v_hat);
    diag.log_mean_w = std::log(w_hat);
    diag.m = measured_per_mean;
    report.stages.push_back(diag);
    log_q += diag.log_mean_v - diag.log_mean_w;
    report.samples_used += 2 * measured_per_mean;
  }
  report.log_q_hat = log_q;
  report.ledger = ledger;
  return report;
}

}  // namespace gibbsum
