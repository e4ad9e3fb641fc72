#include "fbp/pipeline/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fbp/pipeline/pearson.hpp"

namespace fbp::pipeline {

Tensor<double> prepare_planes(const img::FaceChannels& ch, ChannelSet set, std::span<const double> means,
                              std::span<const double> stds) {
  Tensor<double> planes = assemble_planes(ch, set);
  const std::size_t C = planes.dim(0), n = planes.dim(1) * planes.dim(2);
  if (means.size() != C)
    throw ShapeError("prepare_planes: " + std::to_string(means.size()) + " channel means for " + std::to_string(C) +
                     " channels");
  if (!stds.empty() && stds.size() != C) throw ShapeError("prepare_planes: channel stds do not match channel count");
  for (std::size_t c = 0; c < C; ++c) {
    const double inv = stds.empty() ? 1.0 : 1.0 / stds[c];
    for (std::size_t i = 0; i < n; ++i) planes[c * n + i] = (planes[c * n + i] - means[c]) * inv;
  }
  return planes;
}

template <typename T>
std::vector<double> predict_inputs(const nn::Network<T>& net, const std::vector<Tensor<double>>& inputs,
                                   std::size_t batch) {
  std::vector<double> out;
  out.reserve(inputs.size());
  if (inputs.empty()) return out;
  const Shape& one = inputs.front().shape();
  const std::size_t per = inputs.front().size();
  for (std::size_t start = 0; start < inputs.size(); start += batch) {
    const std::size_t B = std::min(batch, inputs.size() - start);
    Tensor<T> x({B, one[0], one[1], one[2]});
    for (std::size_t b = 0; b < B; ++b) {
      const auto& src = inputs[start + b];
      if (src.shape() != one) throw ShapeError("predict_inputs: inconsistent input shapes");
      for (std::size_t i = 0; i < per; ++i) x[b * per + i] = static_cast<T>(src[i]);
    }
    const Tensor<T> y = net.forward(x, nn::Mode::eval);
    for (std::size_t b = 0; b < B; ++b) out.push_back(static_cast<double>(y[b]));
  }
  return out;
}

void summarize(EvalReport& r) {
  std::vector<double> t, p;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (const auto& s : r.samples) {
    t.push_back(s.truth);
    p.push_back(s.prediction);
    abs_sum += std::abs(s.prediction - s.truth);
    sq_sum += (s.prediction - s.truth) * (s.prediction - s.truth);
  }
  const double n = static_cast<double>(r.samples.size());
  r.mae = n > 0 ? abs_sum / n : 0.0;
  r.rmse = n > 0 ? std::sqrt(sq_sum / n) : 0.0;
  r.pearson_r.reset();
  r.pearson_error.clear();
  try {
    r.pearson_r = pearson(t, p);
  } catch (const Error& e) {
    r.pearson_error = e.what();
  }
}

template <typename T>
EvalReport evaluate(const nn::LoadedModel<T>& model, const DatasetIndex& idx, std::span<const std::size_t> subset,
                    DecompositionCache& cache, const EvalOptions& opts) {
  const ChannelSet set = parse_channel_set(model.descriptor.channel_set);
  const nn::NetworkSpec& spec = model.net.spec();
  if (channel_count(set) != model.net.in_channels())
    throw ArgumentError("evaluate: channel set '" + model.descriptor.channel_set + "' does not match a " +
                        std::to_string(model.net.in_channels()) + "-channel model");

  EvalReport report;
  std::vector<Tensor<double>> inputs;
  std::vector<std::size_t> owner;
  for (std::size_t i : subset) {
    if (i >= idx.size()) throw BoundsError("evaluate: record index out of range");
    const auto& rec = idx.records[i];
    const Tensor<double> planes =
        prepare_planes(cache.get(rec.path, model.descriptor.wls, spec.stored_size), set, model.descriptor.means,
                       model.descriptor.stds);
    if (opts.multi_crop) {
      Rng rng(opts.crop_seed + i);
      for (auto& c : make_training_crops(planes, spec.crop_size, opts.crops, rng)) {
        inputs.push_back(std::move(c));
        owner.push_back(report.samples.size());
      }
    } else {
      inputs.push_back(center_crop(planes, spec.crop_size));
      owner.push_back(report.samples.size());
    }
    report.samples.push_back({rec.path.filename().string(), rec.score, 0.0});
  }

  const auto preds = predict_inputs(model.net, inputs);
  std::vector<std::size_t> counts(report.samples.size(), 0);
  for (std::size_t k = 0; k < preds.size(); ++k) {
    report.samples[owner[k]].prediction += preds[k];
    ++counts[owner[k]];
  }
  for (std::size_t s = 0; s < report.samples.size(); ++s)
    report.samples[s].prediction /= static_cast<double>(counts[s]);
  summarize(report);
  return report;
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["config_fingerprint"] = r.config_fingerprint;
  j["count"] = r.samples.size();
  j["pearson_r"] = r.pearson_r ? nlohmann::ordered_json(*r.pearson_r) : nlohmann::ordered_json(nullptr);
  if (!r.pearson_error.empty()) j["pearson_error"] = r.pearson_error;
  j["mae"] = r.mae;
  j["rmse"] = r.rmse;
  auto& arr = j["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : r.samples) {
    nlohmann::ordered_json e;
    e["id"] = s.id;
    e["truth"] = s.truth;
    e["prediction"] = s.prediction;
    arr.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  EvalReport r;
  try {
    const auto j = nlohmann::ordered_json::parse(text);
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    if (!j.at("pearson_r").is_null()) r.pearson_r = j.at("pearson_r").get<double>();
    if (j.contains("pearson_error")) r.pearson_error = j.at("pearson_error").get<std::string>();
    r.mae = j.at("mae").get<double>();
    r.rmse = j.at("rmse").get<double>();
    for (const auto& e : j.at("samples"))
      r.samples.push_back({e.at("id").get<std::string>(), e.at("truth").get<double>(), e.at("prediction").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what(), 0);
  }
  return r;
}

void save_report(const EvalReport& r, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report " + path.string());
  out << report_to_json(r);
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

template std::vector<double> predict_inputs(const nn::Network<float>&, const std::vector<Tensor<double>>&, std::size_t);
template std::vector<double> predict_inputs(const nn::Network<double>&, const std::vector<Tensor<double>>&, std::size_t);
template EvalReport evaluate(const nn::LoadedModel<float>&, const DatasetIndex&, std::span<const std::size_t>,
                             DecompositionCache&, const EvalOptions&);
template EvalReport evaluate(const nn::LoadedModel<double>&, const DatasetIndex&, std::span<const std::size_t>,
                             DecompositionCache&, const EvalOptions&);

}  // namespace fbp::pipeline
