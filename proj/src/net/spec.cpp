#include "fbp/net/spec.hpp"

#include <algorithm>
#include <cctype>

#include "fbp/error.hpp"

namespace fbp::nn {

const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::pool: return "pool";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::dropout: return "dropout";
  }
  return "?";
}

namespace {

NetworkSpec make(std::string name, std::size_t stored, std::size_t crop,
                 std::initializer_list<std::pair<std::size_t, std::size_t>> convs, std::size_t fc_hidden,
                 double keep_rate) {
  NetworkSpec s{std::move(name), stored, crop, {}};
  for (auto [maps, kernel] : convs) {
    s.layers.push_back(LayerSpec::conv(maps, kernel));
    s.layers.push_back(LayerSpec::pool());
  }
  s.layers.push_back(LayerSpec::fc(fc_hidden, true));
  if (keep_rate < 1.0) s.layers.push_back(LayerSpec::dropout(keep_rate));
  s.layers.push_back(LayerSpec::fc(1, false));
  return s;
}

}  // namespace

NetworkSpec cnn1(double keep) { return make("CNN-1", 56, 48, {{50, 7}, {100, 6}, {150, 5}}, 300, keep); }

NetworkSpec cnn2(double keep) {
  return make("CNN-2", 156, 138, {{50, 5}, {100, 5}, {150, 4}, {200, 4}, {250, 3}}, 300, keep);
}

NetworkSpec cnn3(double keep) {
  return make("CNN-3", 256, 227, {{50, 5}, {100, 5}, {150, 4}, {200, 4}, {250, 3}, {300, 2}}, 500, keep);
}

NetworkSpec cnn1_toy(double keep) { return make("CNN-1-toy", 14, 12, {{50, 3}, {100, 2}, {150, 1}}, 300, keep); }

NetworkSpec spec_by_name(const std::string& name, double keep) {
  std::string n;
  for (char c : name)
    if (c != '-' && c != '_') n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (n == "cnn1") return cnn1(keep);
  if (n == "cnn2") return cnn2(keep);
  if (n == "cnn3") return cnn3(keep);
  if (n == "cnn1toy") return cnn1_toy(keep);
  throw SpecError("unknown network spec '" + name + "' (expected CNN-1, CNN-2, CNN-3 or CNN-1-toy)");
}

std::vector<LayerShape> shape_chain(const NetworkSpec& spec, std::size_t in_channels) {
  if (in_channels == 0) throw SpecError(spec.name + ": input channel count must be >= 1");
  if (spec.crop_size == 0 || spec.crop_size > spec.stored_size)
    throw SpecError(spec.name + ": crop size must lie in [1, stored size]");
  if (spec.layers.empty()) throw SpecError(spec.name + ": no layers");

  std::vector<LayerShape> chain{{in_channels, spec.crop_size, spec.crop_size}};
  bool seen_fc = false;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const LayerShape in = chain.back();
    const std::string where = spec.name + " layer " + std::to_string(i + 1) + " (" + to_string(l.kind) + ")";
    LayerShape out = in;
    switch (l.kind) {
      case LayerKind::conv:
        if (seen_fc) throw SpecError(where + ": convolution after a fully connected layer");
        if (l.out == 0 || l.kernel == 0) throw SpecError(where + ": maps and kernel must be >= 1");
        if (l.kernel > in.height || l.kernel > in.width)
          throw SpecError(where + ": kernel " + std::to_string(l.kernel) + " exceeds input extent " +
                          std::to_string(in.height));
        if (i + 1 >= spec.layers.size() || spec.layers[i + 1].kind != LayerKind::pool)
          throw SpecError(where + ": every convolution must be followed by a pooling layer");
        out = {l.out, in.height - l.kernel + 1, in.width - l.kernel + 1};
        break;
      case LayerKind::pool:
        if (l.kernel != 2) throw SpecError(where + ": pooling factor must be 2");
        if (i == 0 || spec.layers[i - 1].kind != LayerKind::conv)
          throw SpecError(where + ": pooling must follow a convolution");
        out = {in.channels, in.height / 2, in.width / 2};
        if (out.height == 0 || out.width == 0)
          throw SpecError(where + ": pooling a " + std::to_string(in.height) + "x" + std::to_string(in.width) +
                          " map leaves no spatial extent");
        break;
      case LayerKind::fully_connected:
        if (l.out == 0) throw SpecError(where + ": neuron count must be >= 1");
        seen_fc = true;
        out = {l.out, 1, 1};
        break;
      case LayerKind::dropout:
        if (!(l.keep_rate > 0.0 && l.keep_rate <= 1.0)) throw SpecError(where + ": keep rate must lie in (0, 1]");
        break;
    }
    chain.push_back(out);
  }
  const LayerSpec& last = spec.layers.back();
  if (last.kind != LayerKind::fully_connected || last.out != 1 || last.relu)
    throw SpecError(spec.name + ": the final layer must be a linear fully connected layer with one neuron");
  return chain;
}

std::vector<std::size_t> side_lengths(const NetworkSpec& spec) {
  const auto chain = shape_chain(spec, 1);
  std::vector<std::size_t> out{spec.crop_size};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto k = spec.layers[i].kind;
    if (k == LayerKind::conv || k == LayerKind::pool) out.push_back(chain[i + 1].height);
  }
  return out;
}

std::size_t conv_layer_count(const NetworkSpec& spec) {
  return static_cast<std::size_t>(
      std::count_if(spec.layers.begin(), spec.layers.end(), [](const LayerSpec& l) { return l.kind == LayerKind::conv; }));
}

}  // namespace fbp::nn
