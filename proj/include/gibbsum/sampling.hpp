// Samplers for Gibbs distributions: an exact inverse-CDF sampler backed by
// enumeration, and single-site heat-bath (Glauber) dynamics for spaces too
// large to enumerate. A GibbsSampler instance owns all chain state and RNG
// streams so runs are reproducible from one seed.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include <json.hpp>

#include "gibbsum/common.hpp"
#include "gibbsum/models.hpp"

namespace gibbsum {

struct SamplerConfig {
  enum class Mode { exact, glauber };
  Mode mode = Mode::exact;
  // Glauber parameters, in units of full sweeps (num_sites single-site updates).
  int mixing_sweeps = 10;
  int burn_in_sweeps = 100;
  std::uint64_t seed = 0;

  static SamplerConfig from_json(const nlohmann::json& spec);
  nlohmann::json to_json() const;
};

// A Markov chain at fixed inverse temperature. current_energy is maintained
// incrementally and always equals energy_of_config(configuration).
struct ChainState {
  std::vector<int> configuration;
  int current_energy = 0;
  double beta = 0.0;
};

// One heat-bath update: pick a uniform site, resample it from its exact
// conditional distribution given the rest. beta may be +infinity (greedy
// resampling among minimal-field values).
void glauber_step(ChainState& chain, const Hamiltonian& h, RngStream& rng);

class GibbsSampler {
 public:
  GibbsSampler(const Hamiltonian& h, SamplerConfig config,
               std::uint64_t enumeration_cap = kDefaultEnumerationCap);

  // One state index distributed (exactly or approximately) as mu_beta.
  std::uint64_t draw_state(double beta);

  // Energy of one draw from mu_beta.
  int draw_energy(double beta);

  // Energy histogram of m draws from mu_beta (size max_energy+1). In exact
  // mode the multinomial is drawn directly by sequential conditional
  // binomials, which has the same distribution as m individual draws; in
  // glauber mode the chain is advanced m times.
  std::vector<std::uint64_t> draw_energy_counts(double beta, std::uint64_t m);

  // Logical number of samples drawn so far (counts each of the m above).
  std::uint64_t samples_drawn() const { return samples_drawn_; }

  const Hamiltonian& model() const { return h_; }
  const SamplerConfig& config() const { return config_; }

 private:
  struct ExactTables {
    std::vector<double> energy_probs;
    std::vector<double> energy_cdf;
    std::vector<double> state_cdf;  // built lazily, only for draw_state
  };

  ExactTables& exact_tables(double beta);
  ChainState& glauber_chain(double beta);

  const Hamiltonian& h_;
  SamplerConfig config_;
  std::uint64_t cap_;
  RngStream draw_rng_;
  std::map<double, ExactTables> exact_cache_;
  std::map<double, ChainState> chains_;
  std::map<double, std::unique_ptr<RngStream>> chain_rngs_;
  std::uint64_t next_chain_index_ = 0;
  std::uint64_t samples_drawn_ = 0;
};

}  // namespace gibbsum
