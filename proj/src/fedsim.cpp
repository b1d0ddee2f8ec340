#include "fairlab/fedsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

namespace fairlab::fedsim {

namespace {

Dataset take_rows(const Dataset& source, const std::vector<int>& rows) {
  Mat f(static_cast<int>(rows.size()), source.dim());
  std::vector<int> labels, sens;
  labels.reserve(rows.size());
  sens.reserve(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    std::memcpy(f.a.data() + r * source.dim(),
                source.features.a.data() + static_cast<size_t>(rows[r]) * source.dim(),
                sizeof(double) * source.dim());
    labels.push_back(source.labels[rows[r]]);
    sens.push_back(source.sensitive[rows[r]]);
  }
  return Dataset::make(std::move(f), std::move(labels), std::move(sens));
}

// Counts per group for one client: `ratio` into the minority group, the rest
// over the other groups in proportion to their source frequencies.
std::vector<int> client_counts(const Dataset& source, int minority_group, double ratio,
                               int total) {
  const int k = source.groups();
  std::vector<double> want(k, 0.0);
  want[minority_group] = ratio * total;
  double rest = 0.0;
  for (int s = 0; s < k; ++s)
    if (s != minority_group) rest += source.group_counts[s];
  for (int s = 0; s < k; ++s)
    if (s != minority_group)
      want[s] = (1.0 - ratio) * total * source.group_counts[s] / rest;
  std::vector<int> counts(k, 0);
  int assigned = 0;
  std::vector<std::pair<double, int>> rema;
  for (int s = 0; s < k; ++s) {
    counts[s] = static_cast<int>(std::floor(want[s]));
    assigned += counts[s];
    rema.push_back({want[s] - counts[s], s});
  }
  std::sort(rema.begin(), rema.end(), std::greater<>());
  for (int i = 0; i < total - assigned; ++i) counts[rema[i % k].second]++;
  return counts;
}

trainer::TrainConfig mode_config(const FedConfig& config, FedMode mode, int client_id) {
  trainer::TrainConfig cfg = config.client_template;
  cfg.seed = config.seed * 1000003u + static_cast<uint64_t>(client_id);
  switch (mode) {
    case FedMode::fedavg:
      cfg.lambda = 0.0;
      cfg.dro = trainer::DroConfig::off();
      break;
    case FedMode::fed_fair:
      cfg.dro = trainer::DroConfig::off();
      break;
    case FedMode::fed_fair_sadro:
      if (cfg.dro.mode == trainer::DroConfig::Mode::off)
        cfg.dro = trainer::DroConfig::lagrangian(0.9);
      break;
  }
  return cfg;
}

}  // namespace

std::vector<ClientState> partition_clients(const Dataset& source, int n_clients,
                                           double minority_client_ratio,
                                           double majority_client_ratio,
                                           int train_per_client, int test_per_client,
                                           uint64_t seed) {
  if (n_clients < 1) throw InvalidParams("partition_clients: need at least one client");
  if (minority_client_ratio <= 0.0 || minority_client_ratio >= 1.0 ||
      majority_client_ratio <= 0.0 || majority_client_ratio >= 1.0)
    throw InvalidParams("partition_clients: ratios must lie in (0,1)");
  const int k = source.groups();
  int minority_group = 0;
  for (int s = 1; s < k; ++s)
    if (source.group_counts[s] < source.group_counts[minority_group]) minority_group = s;

  // Total demand per group across all clients, train + test.
  std::vector<long> demand(k, 0);
  std::vector<std::vector<int>> train_counts, test_counts;
  for (int c = 0; c < n_clients; ++c) {
    const double ratio = c == 0 ? minority_client_ratio : majority_client_ratio;
    train_counts.push_back(client_counts(source, minority_group, ratio, train_per_client));
    test_counts.push_back(client_counts(source, minority_group, ratio, test_per_client));
    for (int s = 0; s < k; ++s) demand[s] += train_counts[c][s] + test_counts[c][s];
  }
  for (int s = 0; s < k; ++s)
    if (demand[s] > source.group_counts[s])
      throw InsufficientData("partition_clients: group " + std::to_string(s) + " needs " +
                             std::to_string(demand[s]) + " samples, has " +
                             std::to_string(source.group_counts[s]));

  std::vector<std::vector<int>> pools(k);
  for (int i = 0; i < source.n(); ++i) pools[source.sensitive[i]].push_back(i);
  std::mt19937_64 rng(seed);
  for (auto& pool : pools) std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<size_t> cursor(k, 0);

  std::vector<ClientState> clients;
  for (int c = 0; c < n_clients; ++c) {
    std::vector<int> train_rows, test_rows;
    for (int s = 0; s < k; ++s) {
      for (int i = 0; i < train_counts[c][s]; ++i) train_rows.push_back(pools[s][cursor[s]++]);
      for (int i = 0; i < test_counts[c][s]; ++i) test_rows.push_back(pools[s][cursor[s]++]);
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    ClientState state;
    state.id = c;
    state.train = take_rows(source, train_rows);
    state.test = take_rows(source, test_rows);
    clients.push_back(std::move(state));
  }
  return clients;
}

FederationResult run_federation(std::vector<ClientState> clients, const FedConfig& config,
                                FedMode mode) {
  if (clients.empty()) throw InvalidParams("run_federation: no clients");
  if (config.rounds < 1 || config.local_steps < 1)
    throw InvalidParams("run_federation: rounds and local_steps must be positive");

  FederationResult result;
  result.clients = std::move(clients);
  const int n_clients = static_cast<int>(result.clients.size());

  std::vector<trainer::Trainer> trainers;
  trainers.reserve(n_clients);
  for (int c = 0; c < n_clients; ++c)
    trainers.emplace_back(result.clients[c].train, mode_config(config, mode, c));

  double total_samples = 0.0;
  for (const auto& cl : result.clients) total_samples += cl.train.n();

  ScoreModel global = trainers[0].model();
  for (int round = 0; round < config.rounds; ++round) {
    std::vector<Vec> updated(n_clients);
    Vec prev_q;
    for (int c = 0; c < n_clients; ++c) {
      trainers[c].set_model(global);
      prev_q = trainers[c].q();
      try {
        for (int e = 0; e < config.local_steps; ++e) trainers[c].step();
      } catch (const DivergedTraining&) {
        throw DivergedTraining("run_federation: client " + std::to_string(c) +
                                   " diverged in round " + std::to_string(round),
                               round);
      }
      updated[c] = trainers[c].model().weights;
      double drift = 0.0;
      for (size_t s = 0; s < prev_q.size(); ++s)
        drift = std::max(drift, std::abs(trainers[c].q()[s] - prev_q[s]));
      if (round == config.rounds - 1 && drift > 1e-3) result.any_q_oscillation = true;
    }
    // Aggregation in client-id order.
    Vec agg(global.weights.size(), 0.0);
    for (int c = 0; c < n_clients; ++c) {
      const double alpha = config.aggregation == FedConfig::Aggregation::uniform
                               ? 1.0 / n_clients
                               : result.clients[c].train.n() / total_samples;
      for (size_t j = 0; j < agg.size(); ++j) agg[j] += alpha * updated[c][j];
    }
    global.weights = agg;
    for (int c = 0; c < n_clients; ++c)
      result.clients[c].round_metrics.push_back(
          trainer::evaluate_model(global, result.clients[c].test));
    if (round == config.rounds - 1) result.client_weights_last_round = updated;
  }
  result.global = global;
  return result;
}

std::vector<LocalBaseline> local_baselines(const std::vector<ClientState>& clients,
                                           const trainer::TrainConfig& config) {
  std::vector<LocalBaseline> out;
  for (const auto& client : clients) {
    trainer::TrainTrace trace =
        config.dro.mode == trainer::DroConfig::Mode::off
            ? (config.lambda > 0.0 ? trainer::train_fair(client.train, config)
                                   : trainer::train_erm(client.train, config))
            : trainer::train_sadro(client.train, config);
    LocalBaseline b;
    b.model = trace.model;
    b.metrics = trainer::evaluate_model(trace.model, client.test);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace fairlab::fedsim
