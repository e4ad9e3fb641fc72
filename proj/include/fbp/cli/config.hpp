#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fbp/pipeline/channels.hpp"
#include "fbp/pipeline/train.hpp"

namespace fbp::cli {

// One `key = value` line; `line` is 0 for command-line overrides.
struct Setting {
  std::string key;
  std::string value;
  std::string source;
  std::size_t line = 0;
};

// Everything a run can be configured with. Each field has exactly one key;
// see kKeys in config.cpp for the names.
struct RunConfig {
  pipeline::TrainConfig train;
  std::filesystem::path index;       // dataset CSV
  std::size_t n_train = 400;         // 0 trains on every record and monitors the training set
  std::uint64_t split_seed = 1;
  std::size_t folds = 5;
  std::vector<pipeline::ChannelSet> stages{pipeline::ChannelSet::detail, pipeline::ChannelSet::base,
                                           pipeline::ChannelSet::rgb};
  std::string precision = "f64";     // f32 | f64
  std::size_t threads = 1;
  std::filesystem::path out_dir = "runs/default";
  std::filesystem::path cache_dir;   // empty: ./.fbp-cache; FBP_CACHE_DIR overrides either
  std::size_t synth_n = 32;
  std::size_t synth_size = 56;
};

// Parses `key = value` lines. `#` starts a comment; blank lines are
// skipped. Lines without `=` are reported with their number.
std::vector<Setting> parse_config_text(const std::string& text, const std::string& source);
std::vector<Setting> read_config_file(const std::filesystem::path& path);

// `key=value` from the command line.
Setting parse_override(const std::string& kv);

// Applies settings in order (later wins). Every unknown key or bad value
// is collected; if any, throws ConfigError listing all of them, one per line.
void apply_settings(RunConfig& cfg, const std::vector<Setting>& settings);

// Every key with its effective value, one per line, in a fixed order.
// Parsing this text back yields an identical configuration.
std::string resolved_text(const RunConfig& cfg);

std::vector<std::string> known_keys();

// Creates `dir` and writes config.resolved.cfg. An existing run directory
// is refused unless `resume` is set and its recorded config has the same
// checksum as `resolved`.
void prepare_run_dir(const std::filesystem::path& dir, const std::string& resolved, bool resume);

}  // namespace fbp::cli
