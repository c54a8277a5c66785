//
// Copyright 2026 The mcsret Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MCSRET_TRAINER_H_
#define MCSRET_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcsret/graph.h"
#include "mcsret/params.h"
#include "mcsret/scorers.h"

namespace mcsret {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Target { kMces, kMccs, kCombo };
std::string target_name(Target t);
Target parse_target(const std::string &name);

struct Split {
  std::vector<int> train, val, test;  // query indices, ascending
};

// Validation and test sizes are floor(fraction * count); the remainder
// goes to training.
Split split_queries(int count, double train_frac, double val_frac, double test_frac,
                    std::uint64_t seed);

// targets[q][c] for every query and corpus graph; throws ValidationError on a
// missing pair.
using TargetTable = std::vector<std::vector<double>>;
TargetTable target_table(const std::vector<LabelRecord> &labels,
                         const std::vector<Graph> &queries, const std::vector<Graph> &corpus,
                         Target target, double combo_a = 0.5);

struct TrainConfig {
  int batch_size = 128;
  AdamConfig adam;
  int patience = 50;
  int max_epochs = 500;
  std::uint64_t seed = 0;
  // Called after every epoch.
  std::function<void(int epoch, double train_mse, double val_mse)> on_epoch;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_mse = 0;
  double val_mse = 0;
};

struct TrainResult {
  ParameterStore best;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_mse = 0;
};

// Minimizes mean squared error over minibatches of shuffled
// (train query, corpus) pairs; returns the parameters with the lowest
// validation MSE.
TrainResult train(const ParameterStore &init, const std::vector<Graph> &queries,
                  const std::vector<Graph> &corpus, const TargetTable &targets,
                  const Split &split, const TrainConfig &config);

// scores[i][c] for queries[subset[i]] against the whole corpus.
std::vector<std::vector<double>> predict(const ParameterStore &store,
                                         const std::vector<Graph> &queries,
                                         const std::vector<int> &subset,
                                         const std::vector<Graph> &corpus);

// Mean over the subset of per-query MSE.
double subset_mse(const std::vector<std::vector<double>> &scores, const TargetTable &targets,
                  const std::vector<int> &subset);

// `epoch<TAB>train_mse<TAB>val_mse` rows under a header.
std::string format_history(const std::vector<EpochRecord> &history);

// Best lambda per dataset tag for LMCCS: MM, MR, FM, FR, DD, COX2, MSRC.
std::optional<double> tagged_lambda(const std::string &dataset_tag);
std::vector<double> default_lambda_grid();

struct LambdaSearch {
  double best_lambda = 0;
  std::vector<std::pair<double, double>> val_mse;  // (lambda, best validation MSE)
  TrainResult best_run;
};

// Trains one model per lambda from the same initial parameters. An empty
// grid falls back to the known value for the dataset tag, else the default grid.
LambdaSearch tune_lambda(const ModelConfig &model, std::uint64_t init_seed,
                         std::vector<double> grid, const std::string &dataset_tag,
                         const std::vector<Graph> &queries, const std::vector<Graph> &corpus,
                         const TargetTable &targets, const Split &split,
                         const TrainConfig &config);

}  // namespace mcsret

#endif  // MCSRET_TRAINER_H_
