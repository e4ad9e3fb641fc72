#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fbp/net/model_io.hpp"
#include "fbp/pipeline/cache.hpp"
#include "fbp/pipeline/channels.hpp"
#include "fbp/pipeline/dataset.hpp"

namespace fbp::pipeline {

struct SamplePrediction {
  std::string id;
  double truth = 0.0;
  double prediction = 0.0;
};

struct EvalReport {
  std::vector<SamplePrediction> samples;
  std::optional<double> pearson_r;  // empty when undefined
  std::string pearson_error;        // why pearson_r is empty
  double mae = 0.0;
  double rmse = 0.0;
  std::string config_fingerprint;
};

struct EvalOptions {
  bool multi_crop = false;      // average predictions over `crops` random windows
  std::size_t crops = 10;
  std::uint64_t crop_seed = 0;  // per-sample stream: Rng(crop_seed + record index)
};

// Planes of `set` standardized per channel, (x - mean) / std, as [C,S,S].
// Empty `stds` divides by 1.
Tensor<double> prepare_planes(const img::FaceChannels& ch, ChannelSet set, std::span<const double> means,
                              std::span<const double> stds = {});

// Eval-mode predictions for a list of [C,K,K] inputs, batched.
template <typename T>
std::vector<double> predict_inputs(const nn::Network<T>& net, const std::vector<Tensor<double>>& inputs,
                                   std::size_t batch = 32);

// Fills pearson/mae/rmse from samples. A zero-variance vector leaves
// pearson_r empty and records the error text.
void summarize(EvalReport& r);

template <typename T>
EvalReport evaluate(const nn::LoadedModel<T>& model, const DatasetIndex& idx, std::span<const std::size_t> subset,
                    DecompositionCache& cache, const EvalOptions& opts = {});

// Human-readable JSON with a stable key order.
std::string report_to_json(const EvalReport& r);
EvalReport report_from_json(const std::string& text);
void save_report(const EvalReport& r, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);

}  // namespace fbp::pipeline
