#include "gibbsum/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace gibbsum {

SamplerConfig SamplerConfig::from_json(const nlohmann::json& spec) {
  SamplerConfig cfg;
  if (!spec.is_object()) throw ValidationError("sampler: expected a JSON object");
  if (spec.contains("mode")) {
    const std::string mode = spec["mode"].get<std::string>();
    if (mode == "exact") {
      cfg.mode = Mode::exact;
    } else if (mode == "glauber") {
      cfg.mode = Mode::glauber;
    } else {
      throw ValidationError("sampler: mode must be 'exact' or 'glauber'");
    }
  }
  if (spec.contains("mixing_sweeps")) cfg.mixing_sweeps = spec["mixing_sweeps"].get<int>();
  if (spec.contains("burn_in_sweeps")) cfg.burn_in_sweeps = spec["burn_in_sweeps"].get<int>();
  if (spec.contains("seed")) cfg.seed = spec["seed"].get<std::uint64_t>();
  if (cfg.mixing_sweeps < 1) throw ValidationError("sampler: mixing_sweeps must be >= 1");
  if (cfg.burn_in_sweeps < 0) throw ValidationError("sampler: burn_in_sweeps must be >= 0");
  return cfg;
}

nlohmann::json SamplerConfig::to_json() const {
  return {{"mode", mode == Mode::exact ? "exact" : "glauber"},
          {"mixing_sweeps", mixing_sweeps},
          {"burn_in_sweeps", burn_in_sweeps},
          {"seed", seed}};
}

void glauber_step(ChainState& chain, const Hamiltonian& h, RngStream& rng) {
  const int site = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(h.num_sites())));
  const int card = h.site_cardinality(site);
  const int old_value = chain.configuration[site];
  const int old_field = h.local_field(chain.configuration, site, old_value);

  thread_local std::vector<int> fields;
  fields.resize(card);
  int min_field = h.local_field(chain.configuration, site, 0);
  fields[0] = min_field;
  for (int a = 1; a < card; ++a) {
    fields[a] = h.local_field(chain.configuration, site, a);
    min_field = std::min(min_field, fields[a]);
  }

  // Conditional weights relative to the minimal field; exact at
  // beta = +infinity where only minimal-field values survive.
  thread_local std::vector<double> cum;
  cum.resize(card);
  double total = 0.0;
  for (int a = 0; a < card; ++a) {
    double w;
    if (std::isinf(chain.beta)) {
      w = fields[a] == min_field ? 1.0 : 0.0;
    } else {
      w = std::exp(-chain.beta * static_cast<double>(fields[a] - min_field));
    }
    total += w;
    cum[a] = total;
  }
  const double u = rng.uniform() * total;
  int pick = 0;
  while (pick < card - 1 && u >= cum[pick]) ++pick;

  chain.configuration[site] = pick;
  chain.current_energy += fields[pick] - old_field;
}

GibbsSampler::GibbsSampler(const Hamiltonian& h, SamplerConfig config,
                           std::uint64_t enumeration_cap)
    : h_(h), config_(config), cap_(enumeration_cap), draw_rng_(config.seed, "sampler-draws") {}

GibbsSampler::ExactTables& GibbsSampler::exact_tables(double beta) {
  auto it = exact_cache_.find(beta);
  if (it != exact_cache_.end()) return it->second;
  if (exact_cache_.size() >= 16) exact_cache_.clear();  // bound memory across many betas
  ExactTables tables;
  tables.energy_probs = exact_energy_distribution(h_, beta, cap_);
  tables.energy_cdf.resize(tables.energy_probs.size());
  double acc = 0.0;
  for (std::size_t e = 0; e < tables.energy_probs.size(); ++e) {
    acc += tables.energy_probs[e];
    tables.energy_cdf[e] = acc;
  }
  tables.energy_cdf.back() = 1.0;
  return exact_cache_.emplace(beta, std::move(tables)).first->second;
}

ChainState& GibbsSampler::glauber_chain(double beta) {
  auto it = chains_.find(beta);
  if (it != chains_.end()) return it->second;

  auto rng = std::make_unique<RngStream>(config_.seed, "glauber-chain", next_chain_index_++);
  ChainState chain;
  chain.beta = beta;
  chain.configuration.resize(h_.num_sites());
  for (int i = 0; i < h_.num_sites(); ++i) {
    chain.configuration[i] =
        static_cast<int>(rng->uniform_index(static_cast<std::uint64_t>(h_.site_cardinality(i))));
  }
  chain.current_energy = h_.energy_of_config(chain.configuration);

  const long steps = static_cast<long>(config_.burn_in_sweeps) * h_.num_sites();
  for (long s = 0; s < steps; ++s) glauber_step(chain, h_, *rng);

  chain_rngs_.emplace(beta, std::move(rng));
  return chains_.emplace(beta, std::move(chain)).first->second;
}

std::uint64_t GibbsSampler::draw_state(double beta) {
  ++samples_drawn_;
  if (config_.mode == SamplerConfig::Mode::glauber) {
    ChainState& chain = glauber_chain(beta);
    RngStream& rng = *chain_rngs_.at(beta);
    const long steps = static_cast<long>(config_.mixing_sweeps) * h_.num_sites();
    for (long s = 0; s < steps; ++s) glauber_step(chain, h_, rng);
    return h_.encode_state(chain.configuration);
  }

  ExactTables& tables = exact_tables(beta);
  if (tables.state_cdf.empty()) {
    const std::vector<double> p = exact_gibbs_distribution(h_, beta, cap_);
    tables.state_cdf.resize(p.size());
    double acc = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) {
      acc += p[s];
      tables.state_cdf[s] = acc;
    }
    tables.state_cdf.back() = 1.0;
  }
  const double u = draw_rng_.uniform();
  const auto it = std::upper_bound(tables.state_cdf.begin(), tables.state_cdf.end(), u);
  return static_cast<std::uint64_t>(std::distance(tables.state_cdf.begin(), it));
}

int GibbsSampler::draw_energy(double beta) {
  if (config_.mode == SamplerConfig::Mode::glauber) {
    ChainState& chain = glauber_chain(beta);
    RngStream& rng = *chain_rngs_.at(beta);
    const long steps = static_cast<long>(config_.mixing_sweeps) * h_.num_sites();
    for (long s = 0; s < steps; ++s) glauber_step(chain, h_, rng);
    ++samples_drawn_;
    return chain.current_energy;
  }
  ExactTables& tables = exact_tables(beta);
  ++samples_drawn_;
  const double u = draw_rng_.uniform();
  const auto it = std::upper_bound(tables.energy_cdf.begin(), tables.energy_cdf.end(), u);
  return static_cast<int>(std::distance(tables.energy_cdf.begin(), it));
}

std::vector<std::uint64_t> GibbsSampler::draw_energy_counts(double beta, std::uint64_t m) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(h_.max_energy()) + 1, 0);
  if (config_.mode == SamplerConfig::Mode::glauber) {
    for (std::uint64_t i = 0; i < m; ++i) ++counts[draw_energy(beta)];
    return counts;
  }

  // Sequential conditional binomials: identical in distribution to m
  // independent inverse-CDF draws, but O(max_energy) instead of O(m).
  ExactTables& tables = exact_tables(beta);
  samples_drawn_ += m;
  std::int64_t remaining = static_cast<std::int64_t>(m);
  double tail = 1.0;
  std::size_t last_positive = 0;
  for (std::size_t e = 0; e < tables.energy_probs.size(); ++e) {
    if (tables.energy_probs[e] > 0.0) last_positive = e;
  }
  for (std::size_t e = 0; e < tables.energy_probs.size() && remaining > 0; ++e) {
    const double p = tables.energy_probs[e];
    if (p <= 0.0) continue;
    if (e == last_positive) {
      counts[e] += static_cast<std::uint64_t>(remaining);
      remaining = 0;
      break;
    }
    const double ratio = std::clamp(p / std::max(tail, p), 0.0, 1.0);
    const std::int64_t c = draw_rng_.binomial(remaining, ratio);
    counts[e] += static_cast<std::uint64_t>(c);
    remaining -= c;
    tail -= p;
  }
  if (remaining > 0) counts[last_positive] += static_cast<std::uint64_t>(remaining);
  return counts;
}

}  // namespace gibbsum
