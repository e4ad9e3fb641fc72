#include "fbp/pipeline/train.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fbp/hash.hpp"
#include "fbp/pipeline/evaluate.hpp"
#include "fbp/pipeline/pearson.hpp"

namespace fbp::pipeline {

void TrainConfig::validate() const {
  if (epochs == 0) throw ArgumentError("epochs must be >= 1");
  if (batch_size == 0) throw ArgumentError("batch_size must be >= 1");
  if (crops_per_image == 0) throw ArgumentError("crops_per_image must be >= 1");
  if (!(lr > 0.0)) throw ArgumentError("lr must be > 0");
  if (!(lr_gamma > 0.0)) throw ArgumentError("lr_gamma must be > 0");
  if (!(dropout_keep > 0.0 && dropout_keep <= 1.0)) throw ArgumentError("dropout_keep must lie in (0, 1]");
  if (!(finetune_lr_scale > 0.0)) throw ArgumentError("finetune_lr_scale must be > 0");
  if (eval_crops == 0) throw ArgumentError("eval_crops must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ArgumentError("weight_decay must be >= 0");
  if (!(early_stop_pearson >= 0.0 && early_stop_pearson <= 1.0))
    throw ArgumentError("early_stop_pearson must lie in [0, 1]");
  try {
    nn::spec_by_name(spec_name);
  } catch (const SpecError& e) {
    throw ArgumentError(e.what());
  }
  wls.validate();
}

std::string TrainConfig::fingerprint() const {
  std::ostringstream s;
  s.precision(17);
  s << spec_name << '|' << dropout_keep << '|' << to_string(channels) << '|' << epochs << '|' << batch_size << '|' << lr
    << '|' << lr_step << '|' << lr_gamma << '|' << momentum << '|' << weight_decay << '|';
  for (double m : layer_lr_mult) s << m << ',';
  s << '|' << crops_per_image << '|' << fixed_crops << '|' << seed << '|' << wls.lambda << '|' << wls.alpha << '|'
    << wls.eps << '|' << wls.cg_tol << '|' << wls.cg_max_iters << '|' << early_stop_pearson << '|'
    << finetune_lr_scale << '|' << static_cast<int>(adapt_mode) << '|' << multi_crop_eval << '|' << eval_crops;
  return hex64(fnv1a64(s.str()));
}

ChannelStats channel_stats(const DatasetIndex& idx, std::span<const std::size_t> records, ChannelSet set,
                           const img::WlsParams& wls, std::size_t stored_size, DecompositionCache& cache) {
  if (records.empty()) throw ArgumentError("channel_stats: no records");
  const std::size_t C = channel_count(set);
  std::vector<double> sum(C, 0.0), sq(C, 0.0);
  std::size_t n = 0;
  // Two passes keep the variance free of cancellation.
  for (std::size_t i : records) {
    const Tensor<double> planes = assemble_planes(cache.get(idx.records.at(i).path, wls, stored_size), set);
    n = planes.dim(1) * planes.dim(2);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t k = 0; k < n; ++k) sum[c] += planes[c * n + k];
  }
  const double total = static_cast<double>(n * records.size());
  ChannelStats st;
  for (std::size_t c = 0; c < C; ++c) st.means.push_back(sum[c] / total);
  for (std::size_t i : records) {
    const Tensor<double> planes = assemble_planes(cache.get(idx.records.at(i).path, wls, stored_size), set);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t k = 0; k < n; ++k) {
        const double d = planes[c * n + k] - st.means[c];
        sq[c] += d * d;
      }
  }
  for (std::size_t c = 0; c < C; ++c) {
    const double sd = std::sqrt(sq[c] / total);
    st.stds.push_back(sd > 1e-12 ? sd : 1.0);
  }
  return st;
}

namespace {

struct Sample {
  std::size_t image;  // position in the prepared list
  CropOffset offset;
};

template <typename T>
double monitor_pearson(const nn::Network<T>& net, const std::vector<Tensor<double>>& inputs,
                       const std::vector<double>& truths) {
  if (inputs.size() < 2) return std::nan("");
  const auto preds = predict_inputs(net, inputs);
  try {
    return pearson(truths, preds);
  } catch (const UndefinedCorrelationError&) {
    return std::nan("");
  }
}

}  // namespace

template <typename T>
TrainResult<T> train(const TrainConfig& cfg, const DatasetIndex& idx, const Split& split, DecompositionCache& cache,
                     const nn::Network<T>* init, const EpochCallback& on_epoch) {
  cfg.validate();
  if (split.train.empty()) throw ArgumentError("train: empty training split");
  const nn::NetworkSpec spec = nn::spec_by_name(cfg.spec_name, cfg.dropout_keep);
  const std::size_t C = channel_count(cfg.channels), S = spec.stored_size, K = spec.crop_size;

  ChannelStats stats = channel_stats(idx, split.train, cfg.channels, cfg.wls, S, cache);
  nn::ChannelDescriptor desc{to_string(cfg.channels), std::move(stats.means), std::move(stats.stds), cfg.wls};

  std::vector<Tensor<double>> planes;
  std::vector<double> targets;
  for (std::size_t i : split.train) {
    planes.push_back(prepare_planes(cache.get(idx.records.at(i).path, cfg.wls, S), cfg.channels, desc.means, desc.stds));
    targets.push_back(idx.records[i].score);
  }
  const std::vector<std::size_t>& monitor_ids = split.test.empty() ? split.train : split.test;
  std::vector<Tensor<double>> monitor_inputs;
  std::vector<double> monitor_truth;
  for (std::size_t i : monitor_ids) {
    monitor_inputs.push_back(
        center_crop(prepare_planes(cache.get(idx.records.at(i).path, cfg.wls, S), cfg.channels, desc.means, desc.stds), K));
    monitor_truth.push_back(idx.records[i].score);
  }

  Rng master(cfg.seed);
  const std::uint64_t init_seed = master.next_u64();
  Rng order_rng = master.split();
  Rng crop_rng = master.split();
  Rng dropout_rng = master.split();

  nn::Network<T> net = init ? *init : nn::Network<T>(spec, C, init_seed);
  if (net.in_channels() != C)
    throw ArgumentError("train: initial network takes " + std::to_string(net.in_channels()) + " channels, channel set '" +
                        to_string(cfg.channels) + "' has " + std::to_string(C));
  if (net.spec().crop_size != K || net.spec().stored_size != S)
    throw ArgumentError("train: initial network was built for a different input size");

  std::vector<Sample> fixed;
  if (cfg.fixed_crops)
    for (std::size_t i = 0; i < planes.size(); ++i)
      for (std::size_t r = 0; r < cfg.crops_per_image; ++r) fixed.push_back({i, random_offset(S, K, crop_rng)});

  TrainResult<T> result{{net, desc}, {net, desc}, {}, 0};
  double best_pearson = -2.0;
  const std::size_t per = C * K * K;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    nn::SgdParams sgd{cfg.lr, cfg.momentum, cfg.weight_decay, cfg.layer_lr_mult};
    if (cfg.lr_step > 0) sgd.lr *= std::pow(cfg.lr_gamma, static_cast<double>((epoch - 1) / cfg.lr_step));

    std::vector<Sample> samples = fixed;
    if (!cfg.fixed_crops)
      for (std::size_t i = 0; i < planes.size(); ++i)
        for (std::size_t r = 0; r < cfg.crops_per_image; ++r) samples.push_back({i, random_offset(S, K, crop_rng)});
    for (std::size_t i = samples.size(); i > 1; --i) std::swap(samples[i - 1], samples[order_rng.next_below(i)]);

    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < samples.size(); start += cfg.batch_size, ++batch_no) {
      const std::size_t B = std::min(cfg.batch_size, samples.size() - start);
      Tensor<T> x({B, C, K, K});
      Tensor<T> y({B, 1});
      for (std::size_t b = 0; b < B; ++b) {
        const Sample& s = samples[start + b];
        const Tensor<double>& src = planes[s.image];
        T* dst = x.ptr() + b * per;
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t row = 0; row < K; ++row)
            for (std::size_t col = 0; col < K; ++col)
              *dst++ = static_cast<T>(src.at(c, s.offset.top + row, s.offset.left + col));
        y[b] = static_cast<T>(targets[s.image]);
      }
      nn::ForwardCache<T> fc;
      const Tensor<T> pred = net.forward(x, nn::Mode::train, &dropout_rng, &fc);
      const auto loss = nn::euclidean_loss(pred, y);
      if (!std::isfinite(loss.loss)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "train: non-finite loss at epoch %zu, batch %zu (lr %.6g)", epoch, batch_no + 1,
                      sgd.lr);
        throw NumericError(buf);
      }
      loss_sum += loss.loss * static_cast<double>(B);
      net.sgd_step(net.backward(fc, loss.grad), sgd);
    }

    EpochStats st{epoch, sgd.lr, loss_sum / static_cast<double>(samples.size()),
                  monitor_pearson(net, monitor_inputs, monitor_truth)};
    result.history.push_back(st);
    if (on_epoch) on_epoch(st);
    if (std::isfinite(st.test_pearson) && st.test_pearson > best_pearson) {
      best_pearson = st.test_pearson;
      result.best = {net, desc};
      result.best_epoch = epoch;
    }
    if (cfg.early_stop_pearson > 0.0 && std::isfinite(st.test_pearson) && st.test_pearson >= cfg.early_stop_pearson)
      break;
  }
  result.final_model = {net, desc};
  if (result.best_epoch == 0) {
    result.best = result.final_model;
    result.best_epoch = result.history.size();
  }
  return result;
}

template <typename T>
std::vector<StageResult<T>> cascade_train(const TrainConfig& cfg, const DatasetIndex& idx, const Split& split,
                                          const std::vector<ChannelSet>& stages, DecompositionCache& cache,
                                          const std::function<void(std::size_t, const EpochStats&)>& on_epoch) {
  if (stages.empty()) throw ArgumentError("cascade: at least one stage is required");
  std::vector<StageResult<T>> out;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    TrainConfig sc = cfg;
    sc.channels = stages[k];
    // Stage streams differ so crops and dropout masks are not replayed.
    sc.seed = cfg.seed + k;
    if (k > 0) sc.lr = cfg.lr * cfg.finetune_lr_scale;
    EpochCallback cb;
    if (on_epoch) cb = [&, k](const EpochStats& s) { on_epoch(k, s); };

    if (k == 0) {
      const nn::NetworkSpec spec = nn::spec_by_name(cfg.spec_name, cfg.dropout_keep);
      Rng master(sc.seed);
      nn::Network<T> fresh(spec, channel_count(stages[0]), master.next_u64());
      auto r = train<T>(sc, idx, split, cache, &fresh, cb);
      out.push_back({stages[0], std::move(fresh), std::move(r)});
    } else {
      const nn::Network<T>& prev = out.back().result.best.net;
      nn::Network<T> start =
          prev.adapt_input(channel_count(stages[k]), Rng(sc.seed).next_u64(), cfg.adapt_mode);
      // Momentum from the previous stage was accumulated at a different
      // learning rate and, after adaptation, for different inputs.
      start.reset_velocity();
      auto r = train<T>(sc, idx, split, cache, &start, cb);
      out.push_back({stages[k], std::move(start), std::move(r)});
    }
  }
  return out;
}

void write_history_csv(const std::vector<EpochStats>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write history " + path.string());
  out << "epoch,train_loss,test_pearson\n";
  char buf[96];
  for (const auto& h : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", h.epoch, h.train_loss, h.test_pearson);
    out << buf;
  }
}

template TrainResult<float> train(const TrainConfig&, const DatasetIndex&, const Split&, DecompositionCache&,
                                  const nn::Network<float>*, const EpochCallback&);
template TrainResult<double> train(const TrainConfig&, const DatasetIndex&, const Split&, DecompositionCache&,
                                   const nn::Network<double>*, const EpochCallback&);
template std::vector<StageResult<float>> cascade_train(const TrainConfig&, const DatasetIndex&, const Split&,
                                                       const std::vector<ChannelSet>&, DecompositionCache&,
                                                       const std::function<void(std::size_t, const EpochStats&)>&);
template std::vector<StageResult<double>> cascade_train(const TrainConfig&, const DatasetIndex&, const Split&,
                                                        const std::vector<ChannelSet>&, DecompositionCache&,
                                                        const std::function<void(std::size_t, const EpochStats&)>&);

}  // namespace fbp::pipeline
