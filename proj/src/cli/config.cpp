#include "fbp/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fbp/hash.hpp"

namespace fbp::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(x)) throw ConfigError("not a finite number");
  return x;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError("not a non-negative integer");
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true or false");
}

std::vector<std::string> split_list(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, sep))
    if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

std::string fmt(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

struct Key {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<std::pair<std::string, Key>>& keys() {
  using pipeline::ChannelSet;
  static const std::vector<std::pair<std::string, Key>> k = {
      {"spec", {[](RunConfig& c, const std::string& v) { nn::spec_by_name(v); c.train.spec_name = v; },
                [](const RunConfig& c) { return c.train.spec_name; }}},
      {"dropout_keep", {[](RunConfig& c, const std::string& v) { c.train.dropout_keep = to_double(v); },
                        [](const RunConfig& c) { return fmt(c.train.dropout_keep); }}},
      {"channels", {[](RunConfig& c, const std::string& v) { c.train.channels = pipeline::parse_channel_set(v); },
                    [](const RunConfig& c) { return pipeline::to_string(c.train.channels); }}},
      {"epochs", {[](RunConfig& c, const std::string& v) { c.train.epochs = to_u64(v); },
                  [](const RunConfig& c) { return std::to_string(c.train.epochs); }}},
      {"batch_size", {[](RunConfig& c, const std::string& v) { c.train.batch_size = to_u64(v); },
                      [](const RunConfig& c) { return std::to_string(c.train.batch_size); }}},
      {"lr", {[](RunConfig& c, const std::string& v) { c.train.lr = to_double(v); },
              [](const RunConfig& c) { return fmt(c.train.lr); }}},
      {"lr_step", {[](RunConfig& c, const std::string& v) { c.train.lr_step = to_u64(v); },
                   [](const RunConfig& c) { return std::to_string(c.train.lr_step); }}},
      {"lr_gamma", {[](RunConfig& c, const std::string& v) { c.train.lr_gamma = to_double(v); },
                    [](const RunConfig& c) { return fmt(c.train.lr_gamma); }}},
      {"momentum", {[](RunConfig& c, const std::string& v) { c.train.momentum = to_double(v); },
                    [](const RunConfig& c) { return fmt(c.train.momentum); }}},
      {"weight_decay", {[](RunConfig& c, const std::string& v) { c.train.weight_decay = to_double(v); },
                        [](const RunConfig& c) { return fmt(c.train.weight_decay); }}},
      {"layer_lr_mult",
       {[](RunConfig& c, const std::string& v) {
          std::vector<double> m;
          for (const auto& s : split_list(v, ',')) m.push_back(to_double(s));
          c.train.layer_lr_mult = std::move(m);
        },
        [](const RunConfig& c) {
          std::string s;
          for (double m : c.train.layer_lr_mult) s += (s.empty() ? "" : ",") + fmt(m);
          return s;
        }}},
      {"crops_per_image", {[](RunConfig& c, const std::string& v) { c.train.crops_per_image = to_u64(v); },
                           [](const RunConfig& c) { return std::to_string(c.train.crops_per_image); }}},
      {"fixed_crops", {[](RunConfig& c, const std::string& v) { c.train.fixed_crops = to_bool(v); },
                       [](const RunConfig& c) { return std::string(c.train.fixed_crops ? "true" : "false"); }}},
      {"seed", {[](RunConfig& c, const std::string& v) { c.train.seed = to_u64(v); },
                [](const RunConfig& c) { return std::to_string(c.train.seed); }}},
      {"wls_lambda", {[](RunConfig& c, const std::string& v) { c.train.wls.lambda = to_double(v); },
                      [](const RunConfig& c) { return fmt(c.train.wls.lambda); }}},
      {"wls_alpha", {[](RunConfig& c, const std::string& v) { c.train.wls.alpha = to_double(v); },
                     [](const RunConfig& c) { return fmt(c.train.wls.alpha); }}},
      {"wls_eps", {[](RunConfig& c, const std::string& v) { c.train.wls.eps = to_double(v); },
                   [](const RunConfig& c) { return fmt(c.train.wls.eps); }}},
      {"wls_cg_tol", {[](RunConfig& c, const std::string& v) { c.train.wls.cg_tol = to_double(v); },
                      [](const RunConfig& c) { return fmt(c.train.wls.cg_tol); }}},
      {"wls_cg_max_iters", {[](RunConfig& c, const std::string& v) { c.train.wls.cg_max_iters = to_u64(v); },
                            [](const RunConfig& c) { return std::to_string(c.train.wls.cg_max_iters); }}},
      {"early_stop_pearson", {[](RunConfig& c, const std::string& v) { c.train.early_stop_pearson = to_double(v); },
                              [](const RunConfig& c) { return fmt(c.train.early_stop_pearson); }}},
      {"finetune_lr_scale", {[](RunConfig& c, const std::string& v) { c.train.finetune_lr_scale = to_double(v); },
                             [](const RunConfig& c) { return fmt(c.train.finetune_lr_scale); }}},
      {"adapt_mode",
       {[](RunConfig& c, const std::string& v) {
          if (v == "reinit")
            c.train.adapt_mode = nn::AdaptMode::reinit;
          else if (v == "replicate")
            c.train.adapt_mode = nn::AdaptMode::replicate;
          else
            throw ConfigError("expected reinit or replicate");
        },
        [](const RunConfig& c) {
          return std::string(c.train.adapt_mode == nn::AdaptMode::reinit ? "reinit" : "replicate");
        }}},
      {"multi_crop_eval", {[](RunConfig& c, const std::string& v) { c.train.multi_crop_eval = to_bool(v); },
                           [](const RunConfig& c) { return std::string(c.train.multi_crop_eval ? "true" : "false"); }}},
      {"eval_crops", {[](RunConfig& c, const std::string& v) { c.train.eval_crops = to_u64(v); },
                      [](const RunConfig& c) { return std::to_string(c.train.eval_crops); }}},
      {"index", {[](RunConfig& c, const std::string& v) { c.index = v; },
                 [](const RunConfig& c) { return c.index.string(); }}},
      {"n_train", {[](RunConfig& c, const std::string& v) { c.n_train = to_u64(v); },
                   [](const RunConfig& c) { return std::to_string(c.n_train); }}},
      {"split_seed", {[](RunConfig& c, const std::string& v) { c.split_seed = to_u64(v); },
                      [](const RunConfig& c) { return std::to_string(c.split_seed); }}},
      {"folds", {[](RunConfig& c, const std::string& v) { c.folds = to_u64(v); },
                 [](const RunConfig& c) { return std::to_string(c.folds); }}},
      {"stages",
       {[](RunConfig& c, const std::string& v) {
          std::vector<ChannelSet> s;
          for (const auto& name : split_list(v, ',')) s.push_back(pipeline::parse_channel_set(name));
          if (s.empty()) throw ConfigError("at least one stage is required");
          c.stages = std::move(s);
        },
        [](const RunConfig& c) {
          std::string s;
          for (auto st : c.stages) s += (s.empty() ? "" : ",") + pipeline::to_string(st);
          return s;
        }}},
      {"precision",
       {[](RunConfig& c, const std::string& v) {
          if (v != "f32" && v != "f64") throw ConfigError("expected f32 or f64");
          c.precision = v;
        },
        [](const RunConfig& c) { return c.precision; }}},
      {"threads",
       {[](RunConfig& c, const std::string& v) {
          c.threads = to_u64(v);
          if (c.threads == 0) throw ConfigError("must be >= 1");
        },
        [](const RunConfig& c) { return std::to_string(c.threads); }}},
      {"out_dir", {[](RunConfig& c, const std::string& v) { c.out_dir = v; },
                   [](const RunConfig& c) { return c.out_dir.string(); }}},
      {"cache_dir", {[](RunConfig& c, const std::string& v) { c.cache_dir = v; },
                     [](const RunConfig& c) { return c.cache_dir.string(); }}},
      {"synth_n", {[](RunConfig& c, const std::string& v) { c.synth_n = to_u64(v); },
                   [](const RunConfig& c) { return std::to_string(c.synth_n); }}},
      {"synth_size", {[](RunConfig& c, const std::string& v) { c.synth_size = to_u64(v); },
                      [](const RunConfig& c) { return std::to_string(c.synth_size); }}},
  };
  return k;
}

std::string where(const Setting& s) {
  return s.line ? s.source + ":" + std::to_string(s.line) : s.source;
}

}  // namespace

std::vector<Setting> parse_config_text(const std::string& text, const std::string& source) {
  std::vector<Setting> out;
  std::vector<std::string> errors;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (line == 1 && raw.rfind("\xEF\xBB\xBF", 0) == 0) raw.erase(0, 3);
    const std::string body = trim(raw.substr(0, raw.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos || trim(body.substr(0, eq)).empty()) {
      errors.push_back(source + ":" + std::to_string(line) + ": expected key = value");
      continue;
    }
    out.push_back({trim(body.substr(0, eq)), trim(body.substr(eq + 1)), source, line});
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw ConfigError(msg);
  }
  return out;
}

std::vector<Setting> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

Setting parse_override(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || trim(kv.substr(0, eq)).empty())
    throw ConfigError("--set " + kv + ": expected key=value");
  return {trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)), "--set", 0};
}

void apply_settings(RunConfig& cfg, const std::vector<Setting>& settings) {
  std::vector<std::string> errors;
  for (const Setting& s : settings) {
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& k) { return k.first == s.key; });
    if (it == table.end()) {
      errors.push_back(where(s) + ": unknown key '" + s.key + "'");
      continue;
    }
    try {
      it->second.set(cfg, s.value);
    } catch (const Error& e) {
      errors.push_back(where(s) + ": " + s.key + " = '" + s.value + "': " + e.what());
    }
  }
  if (errors.empty()) {
    try {
      cfg.train.validate();
    } catch (const Error& e) {
      errors.push_back(std::string("invalid configuration: ") + e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw ConfigError(msg);
  }
}

std::string resolved_text(const RunConfig& cfg) {
  std::string out = "# fully resolved configuration\n";
  for (const auto& [name, key] : keys()) out += name + " = " + key.get(cfg) + "\n";
  return out;
}

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.push_back(k.first);
  return out;
}

void prepare_run_dir(const std::filesystem::path& dir, const std::string& resolved, bool resume) {
  namespace fs = std::filesystem;
  const fs::path file = dir / "config.resolved.cfg";
  std::error_code ec;
  if (fs::exists(file, ec)) {
    if (!resume)
      throw StateError("run directory " + dir.string() + " already holds a run; pass --resume to rerun it");
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    if (fnv1a64(ss.str()) != fnv1a64(resolved))
      throw StateError("run directory " + dir.string() + " was created with a different configuration (checksum " +
                       hex64(fnv1a64(ss.str())) + ", now " + hex64(fnv1a64(resolved)) + ")");
    return;
  }
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << resolved;
}

}  // namespace fbp::cli
