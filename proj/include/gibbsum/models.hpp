// Integer-valued Hamiltonians on finite product state spaces, plus
// enumeration-backed oracles for partition functions, Gibbs distributions,
// and exact moments. Oracles are the ground truth the estimators are
// checked against; they enumerate the state space and work in log domain.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gibbsum/common.hpp"

namespace gibbsum {

struct Enumeration {
  std::vector<std::int32_t> energies;        // energy per state index
  std::vector<std::uint64_t> energy_counts;  // histogram, size max_energy+1
};

// An integer Hamiltonian H : {0,...,|Omega|-1} -> {0,...,n} over a product
// of finite per-site ranges. Implementations are immutable after
// construction and shareable across threads.
class Hamiltonian {
 public:
  virtual ~Hamiltonian() = default;
  Hamiltonian() = default;
  Hamiltonian(const Hamiltonian&) = delete;
  Hamiltonian& operator=(const Hamiltonian&) = delete;

  virtual std::uint64_t state_count() const = 0;
  // Upper bound n on the energy range {0,...,n}; need not be attained.
  virtual int max_energy() const = 0;
  virtual int energy(std::uint64_t state) const = 0;
  virtual int num_sites() const = 0;
  virtual int site_cardinality(int site) const = 0;

  // Energy contribution of `site` holding `value` against the rest of
  // `config`; flipping one site changes H by the field difference.
  virtual int local_field(const std::vector<int>& config, int site, int value) const = 0;

  // ln |Omega|, computed from per-site cardinalities (exact for large spaces).
  double q() const;

  void decode_state(std::uint64_t state, std::vector<int>& config) const;
  std::uint64_t encode_state(const std::vector<int>& config) const;
  int energy_of_config(const std::vector<int>& config) const;

 private:
  friend const Enumeration& enumerate_states(const Hamiltonian&, std::uint64_t);
  mutable std::once_flag enum_once_;
  mutable std::unique_ptr<Enumeration> enum_cache_;
};

// Graph Ising model: sites are binary spins, H = number of edges whose
// endpoints disagree. The two constant configurations are ground states.
class IsingModel : public Hamiltonian {
 public:
  IsingModel(int vertices, std::vector<std::pair<int, int>> edges);

  std::uint64_t state_count() const override;
  int max_energy() const override { return static_cast<int>(edges_.size()); }
  int energy(std::uint64_t state) const override;
  int num_sites() const override { return vertices_; }
  int site_cardinality(int) const override { return 2; }
  int local_field(const std::vector<int>& config, int site, int value) const override;

  int vertices() const { return vertices_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

 private:
  int vertices_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adjacency_;
};

// Graph Potts model with k colors, H = number of monochromatic edges.
// Zero-energy states are exactly the proper k-colorings.
class PottsModel : public Hamiltonian {
 public:
  PottsModel(int vertices, std::vector<std::pair<int, int>> edges, int k);

  std::uint64_t state_count() const override;
  int max_energy() const override { return static_cast<int>(edges_.size()); }
  int energy(std::uint64_t state) const override;
  int num_sites() const override { return vertices_; }
  int site_cardinality(int) const override { return colors_; }
  int local_field(const std::vector<int>& config, int site, int value) const override;

  int vertices() const { return vertices_; }
  int colors() const { return colors_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

 private:
  int vertices_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adjacency_;
  int colors_;
};

// Arbitrary energy table on a single site; used to exercise the algorithms
// on adversarial energy landscapes.
class LookupHamiltonian : public Hamiltonian {
 public:
  explicit LookupHamiltonian(std::vector<int> energies);

  std::uint64_t state_count() const override { return energies_.size(); }
  int max_energy() const override { return max_energy_; }
  int energy(std::uint64_t state) const override { return energies_[state]; }
  int num_sites() const override { return 1; }
  int site_cardinality(int) const override { return static_cast<int>(energies_.size()); }
  int local_field(const std::vector<int>&, int, int value) const override {
    return energies_[value];
  }

 private:
  std::vector<int> energies_;
  int max_energy_;
};

// Parses {"type": "ising"|"potts"|"lookup", ...}. Malformed input raises
// ValidationError.
std::unique_ptr<Hamiltonian> load_model(const nlohmann::json& spec);
std::unique_ptr<Hamiltonian> load_model_file(const std::string& path);

// Enumerates all states once per Hamiltonian (cached). Throws PipelineError
// if state_count() exceeds `cap`.
const Enumeration& enumerate_states(const Hamiltonian& h,
                                    std::uint64_t cap = kDefaultEnumerationCap);

// ln Z(beta). beta may be +infinity, in which case Z counts zero-energy
// states (and ln Z = -infinity if there are none).
double exact_log_partition(const Hamiltonian& h, double beta,
                           std::uint64_t cap = kDefaultEnumerationCap);

struct PartitionValue {
  double value;
  double log_value;
};
PartitionValue exact_partition_function(const Hamiltonian& h, double beta,
                                        std::uint64_t cap = kDefaultEnumerationCap);

// Gibbs probabilities per state index; exactly normalized.
std::vector<double> exact_gibbs_distribution(const Hamiltonian& h, double beta,
                                             std::uint64_t cap = kDefaultEnumerationCap);

// Gibbs probabilities aggregated by energy level (size max_energy+1).
std::vector<double> exact_energy_distribution(const Hamiltonian& h, double beta,
                                              std::uint64_t cap = kDefaultEnumerationCap);

struct Moments {
  double mean;
  double second_moment;
  double relative_variance;  // second_moment / mean^2
};

// Mean, second moment, and relative variance of f under the Gibbs
// distribution at beta. Throws PipelineError if the mean is zero.
Moments exact_moments(const Hamiltonian& h, double beta,
                      const std::function<double(std::uint64_t)>& f,
                      std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace gibbsum
