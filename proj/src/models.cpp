#include "gibbsum/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace gibbsum {

namespace {

std::vector<std::vector<int>> build_adjacency(int vertices,
                                              const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(vertices);
  for (const auto& [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

void validate_graph(int vertices, const std::vector<std::pair<int, int>>& edges) {
  if (vertices < 1) throw ValidationError("model: vertices must be >= 1");
  std::set<std::pair<int, int>> seen;
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= vertices || v < 0 || v >= vertices)
      throw ValidationError("model: edge endpoint out of range");
    if (u == v) throw ValidationError("model: self-loop edge");
    auto key = std::minmax(u, v);
    if (!seen.insert(key).second) throw ValidationError("model: duplicate edge");
  }
}

void check_indexable(int sites, int cardinality) {
  // State indices must fit in 64 bits.
  double bits = sites * std::log2(static_cast<double>(cardinality));
  if (bits > 62.0) throw ValidationError("model: state space too large to index");
}

}  // namespace

double Hamiltonian::q() const {
  double s = 0.0;
  for (int i = 0; i < num_sites(); ++i) s += std::log(static_cast<double>(site_cardinality(i)));
  return s;
}

void Hamiltonian::decode_state(std::uint64_t state, std::vector<int>& config) const {
  const int sites = num_sites();
  config.resize(sites);
  for (int i = 0; i < sites; ++i) {
    const auto card = static_cast<std::uint64_t>(site_cardinality(i));
    config[i] = static_cast<int>(state % card);
    state /= card;
  }
}

std::uint64_t Hamiltonian::encode_state(const std::vector<int>& config) const {
  std::uint64_t state = 0;
  for (int i = num_sites() - 1; i >= 0; --i) {
    state = state * static_cast<std::uint64_t>(site_cardinality(i)) +
            static_cast<std::uint64_t>(config[i]);
  }
  return state;
}

int Hamiltonian::energy_of_config(const std::vector<int>& config) const {
  return energy(encode_state(config));
}

IsingModel::IsingModel(int vertices, std::vector<std::pair<int, int>> edges)
    : vertices_(vertices), edges_(std::move(edges)) {
  validate_graph(vertices_, edges_);
  check_indexable(vertices_, 2);
  adjacency_ = build_adjacency(vertices_, edges_);
}

std::uint64_t IsingModel::state_count() const {
  return std::uint64_t{1} << vertices_;
}

int IsingModel::energy(std::uint64_t state) const {
  int h = 0;
  for (const auto& [u, v] : edges_) {
    h += static_cast<int>(((state >> u) & 1u) != ((state >> v) & 1u));
  }
  return h;
}

int IsingModel::local_field(const std::vector<int>& config, int site, int value) const {
  int f = 0;
  for (int nbr : adjacency_[site]) f += static_cast<int>(config[nbr] != value);
  return f;
}

PottsModel::PottsModel(int vertices, std::vector<std::pair<int, int>> edges, int k)
    : vertices_(vertices), edges_(std::move(edges)), colors_(k) {
  validate_graph(vertices_, edges_);
  if (colors_ < 2) throw ValidationError("model: potts needs k >= 2");
  check_indexable(vertices_, colors_);
  adjacency_ = build_adjacency(vertices_, edges_);
}

std::uint64_t PottsModel::state_count() const {
  std::uint64_t n = 1;
  for (int i = 0; i < vertices_; ++i) n *= static_cast<std::uint64_t>(colors_);
  return n;
}

int PottsModel::energy(std::uint64_t state) const {
  thread_local std::vector<int> config;
  decode_state(state, config);
  int h = 0;
  for (const auto& [u, v] : edges_) h += static_cast<int>(config[u] == config[v]);
  return h;
}

int PottsModel::local_field(const std::vector<int>& config, int site, int value) const {
  int f = 0;
  for (int nbr : adjacency_[site]) f += static_cast<int>(config[nbr] == value);
  return f;
}

LookupHamiltonian::LookupHamiltonian(std::vector<int> energies)
    : energies_(std::move(energies)) {
  if (energies_.empty()) throw ValidationError("model: lookup table must be non-empty");
  int lo = energies_[0], hi = energies_[0];
  for (int e : energies_) {
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  if (lo < 0) throw ValidationError("model: lookup energies must be non-negative");
  if (lo != 0) throw ValidationError("model: lookup table must contain a zero-energy state");
  max_energy_ = hi;
}

std::unique_ptr<Hamiltonian> load_model(const nlohmann::json& spec) {
  if (!spec.is_object()) throw ValidationError("model: expected a JSON object");
  if (!spec.contains("type") || !spec["type"].is_string())
    throw ValidationError("model: missing string field 'type'");
  const std::string type = spec["type"].get<std::string>();

  auto get_int = [&](const char* key) {
    if (!spec.contains(key) || !spec[key].is_number_integer())
      throw ValidationError(std::string("model: missing integer field '") + key + "'");
    return spec[key].get<long long>();
  };
  auto get_edges = [&]() {
    std::vector<std::pair<int, int>> edges;
    if (!spec.contains("edges") || !spec["edges"].is_array())
      throw ValidationError("model: missing array field 'edges'");
    for (const auto& e : spec["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw ValidationError("model: each edge must be a pair of integers");
      edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return edges;
  };

  if (type == "ising") {
    return std::make_unique<IsingModel>(static_cast<int>(get_int("vertices")), get_edges());
  }
  if (type == "potts") {
    return std::make_unique<PottsModel>(static_cast<int>(get_int("vertices")), get_edges(),
                                        static_cast<int>(get_int("k")));
  }
  if (type == "lookup") {
    if (!spec.contains("energies") || !spec["energies"].is_array())
      throw ValidationError("model: missing array field 'energies'");
    std::vector<int> energies;
    for (const auto& e : spec["energies"]) {
      if (!e.is_number_integer()) throw ValidationError("model: energies must be integers");
      energies.push_back(e.get<int>());
    }
    return std::make_unique<LookupHamiltonian>(std::move(energies));
  }
  throw ValidationError("model: unknown type '" + type + "'");
}

std::unique_ptr<Hamiltonian> load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("model: cannot open file " + path);
  nlohmann::json spec;
  try {
    in >> spec;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("model: JSON parse error: ") + e.what());
  }
  return load_model(spec);
}

const Enumeration& enumerate_states(const Hamiltonian& h, std::uint64_t cap) {
  if (h.state_count() > cap) {
    std::ostringstream msg;
    msg << "enumeration infeasible: " << h.state_count() << " states exceeds cap " << cap;
    throw PipelineError(msg.str());
  }
  std::call_once(h.enum_once_, [&h]() {
    auto table = std::make_unique<Enumeration>();
    const std::uint64_t count = h.state_count();
    table->energies.resize(count);
    table->energy_counts.assign(static_cast<std::size_t>(h.max_energy()) + 1, 0);
    for (std::uint64_t s = 0; s < count; ++s) {
      const int e = h.energy(s);
      table->energies[s] = e;
      ++table->energy_counts[e];
    }
    h.enum_cache_ = std::move(table);
  });
  return *h.enum_cache_;
}

namespace {

void check_beta(double beta) {
  if (std::isnan(beta) || beta < 0.0)
    throw ValidationError("beta must be in [0, +infinity]");
}

}  // namespace

double exact_log_partition(const Hamiltonian& h, double beta, std::uint64_t cap) {
  check_beta(beta);
  const Enumeration& en = enumerate_states(h, cap);
  if (std::isinf(beta)) {
    const std::uint64_t c0 = en.energy_counts[0];
    return c0 == 0 ? -kInf : std::log(static_cast<double>(c0));
  }
  std::vector<double> terms;
  terms.reserve(en.energy_counts.size());
  for (std::size_t e = 0; e < en.energy_counts.size(); ++e) {
    if (en.energy_counts[e] == 0) continue;
    terms.push_back(std::log(static_cast<double>(en.energy_counts[e])) -
                    beta * static_cast<double>(e));
  }
  return log_sum_exp(terms);
}

PartitionValue exact_partition_function(const Hamiltonian& h, double beta, std::uint64_t cap) {
  const double lz = exact_log_partition(h, beta, cap);
  return {std::exp(lz), lz};
}

std::vector<double> exact_gibbs_distribution(const Hamiltonian& h, double beta,
                                             std::uint64_t cap) {
  check_beta(beta);
  const Enumeration& en = enumerate_states(h, cap);
  const double lz = exact_log_partition(h, beta, cap);
  if (lz == -kInf) throw PipelineError("gibbs distribution undefined: no zero-energy states");
  std::vector<double> p(en.energies.size(), 0.0);
  if (std::isinf(beta)) {
    const double w = 1.0 / static_cast<double>(en.energy_counts[0]);
    for (std::size_t s = 0; s < p.size(); ++s) {
      if (en.energies[s] == 0) p[s] = w;
    }
    return p;
  }
  double total = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    p[s] = std::exp(-beta * static_cast<double>(en.energies[s]) - lz);
    total += p[s];
  }
  // Renormalize away the last-bit rounding so downstream exact checks see a
  // true probability vector.
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> exact_energy_distribution(const Hamiltonian& h, double beta,
                                              std::uint64_t cap) {
  check_beta(beta);
  const Enumeration& en = enumerate_states(h, cap);
  const double lz = exact_log_partition(h, beta, cap);
  if (lz == -kInf) throw PipelineError("energy distribution undefined: no zero-energy states");
  std::vector<double> p(en.energy_counts.size(), 0.0);
  if (std::isinf(beta)) {
    p[0] = 1.0;
    return p;
  }
  double total = 0.0;
  for (std::size_t e = 0; e < p.size(); ++e) {
    if (en.energy_counts[e] == 0) continue;
    p[e] = std::exp(std::log(static_cast<double>(en.energy_counts[e])) -
                    beta * static_cast<double>(e) - lz);
    total += p[e];
  }
  for (double& v : p) v /= total;
  return p;
}

Moments exact_moments(const Hamiltonian& h, double beta,
                      const std::function<double(std::uint64_t)>& f, std::uint64_t cap) {
  const std::vector<double> p = exact_gibbs_distribution(h, beta, cap);
  double mean = 0.0, second = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (p[s] == 0.0) continue;  // skip zero-probability states so f may be infinite there
    const double v = f(s);
    mean += p[s] * v;
    second += p[s] * v * v;
  }
  if (mean == 0.0) throw PipelineError("degenerate function: zero mean under Gibbs distribution");
  return {mean, second, second / (mean * mean)};
}

}  // namespace gibbsum
