#ifndef FAIRLAB_FEDSIM_HPP
#define FAIRLAB_FEDSIM_HPP

#include <vector>

#include "fairlab/core.hpp"
#include "fairlab/trainer.hpp"

namespace fairlab::fedsim {

struct ClientState {
  int id = 0;
  Dataset train;
  Dataset test;
  std::vector<MetricsRecord> round_metrics;  // global model on the client's test split
};

struct FedConfig {
  enum class Aggregation { uniform, sample_weighted };

  int rounds = 50;
  int local_steps = 10;
  trainer::TrainConfig client_template;
  Aggregation aggregation = Aggregation::sample_weighted;
  uint64_t seed = 0;
};

enum class FedMode { fedavg, fed_fair, fed_fair_sadro };

// Client 1 draws `minority_client_ratio` of its samples from the globally
// least frequent group; every other client draws `majority_client_ratio`.
// Test splits use the same per-client ratios. All client datasets are
// pairwise disjoint rows of the source.
std::vector<ClientState> partition_clients(const Dataset& source, int n_clients,
                                           double minority_client_ratio,
                                           double majority_client_ratio,
                                           int train_per_client, int test_per_client,
                                           uint64_t seed);

struct FederationResult {
  std::vector<ClientState> clients;
  ScoreModel global;
  std::vector<Vec> client_weights_last_round;  // for the aggregation identity
  bool any_q_oscillation = false;
};

// Periodic weight averaging: every round each client runs `local_steps` of
// its local objective (plain risk / fairness-penalized / SA-DRO with a local
// q anchored at the client's own group marginal), then the server averages
// the weights in client-id order.
FederationResult run_federation(std::vector<ClientState> clients, const FedConfig& config,
                                FedMode mode);

struct LocalBaseline {
  MetricsRecord metrics;  // on the client's own test split
  ScoreModel model;
};

// Independent per-client training with the same configuration; no
// communication.
std::vector<LocalBaseline> local_baselines(const std::vector<ClientState>& clients,
                                           const trainer::TrainConfig& config);

}  // namespace fairlab::fedsim

#endif
