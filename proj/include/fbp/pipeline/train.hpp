#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fbp/net/model_io.hpp"
#include "fbp/pipeline/cache.hpp"
#include "fbp/pipeline/channels.hpp"
#include "fbp/pipeline/dataset.hpp"
#include "fbp/pipeline/split.hpp"

namespace fbp::pipeline {

struct TrainConfig {
  std::string spec_name = "CNN-1";
  double dropout_keep = 0.5;
  ChannelSet channels = ChannelSet::detail;
  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  double lr = 0.002;
  std::size_t lr_step = 0;  // epochs between decays by lr_gamma; 0 keeps lr constant
  double lr_gamma = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<double> layer_lr_mult;
  std::size_t crops_per_image = 10;
  bool fixed_crops = false;  // draw each image's crops once instead of every epoch
  std::uint64_t seed = 1;
  img::WlsParams wls;
  double early_stop_pearson = 0.0;  // stop once the monitored Pearson reaches this; 0 disables
  double finetune_lr_scale = 0.1;   // lr multiplier for cascade stages after the first
  nn::AdaptMode adapt_mode = nn::AdaptMode::reinit;
  bool multi_crop_eval = false;
  std::size_t eval_crops = 10;

  void validate() const;
  // Stable digest of every field, recorded in reports.
  std::string fingerprint() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double test_pearson = std::nan("");  // NaN when undefined (zero-variance predictions)
};

template <typename T>
struct TrainResult {
  nn::LoadedModel<T> best;         // highest monitored Pearson; the final model if none was defined
  nn::LoadedModel<T> final_model;  // state after the last epoch
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

struct ChannelStats {
  std::vector<double> means;
  std::vector<double> stds;  // population std over every pixel; 1 for a constant channel
};

// Per-channel statistics over the full planes of the listed records.
ChannelStats channel_stats(const DatasetIndex& idx, std::span<const std::size_t> records, ChannelSet set,
                           const img::WlsParams& wls, std::size_t stored_size, DecompositionCache& cache);

// Epoch loop: random crops -> minibatch forward/backward -> SGD, then a
// center-crop evaluation of the test split (the training split when the
// test split is empty). `init` continues from an existing network whose
// input channel count must match the configured channel set.
template <typename T>
TrainResult<T> train(const TrainConfig& cfg, const DatasetIndex& idx, const Split& split, DecompositionCache& cache,
                     const nn::Network<T>* init = nullptr, const EpochCallback& on_epoch = {});

template <typename T>
struct StageResult {
  ChannelSet channels;
  nn::Network<T> initial;  // the network as the stage started (after input adaptation)
  TrainResult<T> result;
};

// Cascaded fine-tuning: stage 1 trains from scratch, each later stage starts
// from the previous stage's best model (adapted when the channel count
// changes) at lr * finetune_lr_scale.
template <typename T>
std::vector<StageResult<T>> cascade_train(const TrainConfig& cfg, const DatasetIndex& idx, const Split& split,
                                          const std::vector<ChannelSet>& stages, DecompositionCache& cache,
                                          const std::function<void(std::size_t, const EpochStats&)>& on_epoch = {});

// `epoch,train_loss,test_pearson` with round-trip precision.
void write_history_csv(const std::vector<EpochStats>& history, const std::filesystem::path& path);

}  // namespace fbp::pipeline
