#include "fbp/cli/commands.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "fbp/cli/config.hpp"
#include "fbp/imageproc/decompose.hpp"
#include "fbp/imageproc/pnm.hpp"
#include "fbp/pipeline/evaluate.hpp"
#include "fbp/pipeline/synth.hpp"
#include "fbp/pipeline/train.hpp"
#include "fbp/viz/viz.hpp"

namespace fbp::cli {

namespace fs = std::filesystem;
using pipeline::DatasetIndex;
using pipeline::Split;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out_dir;
  std::optional<std::string> precision;
  std::optional<std::string> index;
  std::optional<double> wls_lambda;
  std::optional<std::size_t> k;
  std::vector<std::string> sets;
  bool resume = false;
};

RunConfig resolve(const Globals& g) {
  std::vector<Setting> s;
  if (!g.config.empty()) s = read_config_file(g.config);
  auto flag = [&](const char* key, const std::string& v, const char* name) { s.push_back({key, v, name, 0}); };
  if (g.index) flag("index", *g.index, "--index");
  if (g.seed) flag("seed", std::to_string(*g.seed), "--seed");
  if (g.threads) flag("threads", std::to_string(*g.threads), "--threads");
  if (g.out_dir) flag("out_dir", *g.out_dir, "--out-dir");
  if (g.precision) flag("precision", *g.precision, "--precision");
  if (g.k) flag("folds", std::to_string(*g.k), "--k");
  if (g.wls_lambda) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *g.wls_lambda);
    flag("wls_lambda", buf, "--wls-lambda");
  }
  for (const auto& kv : g.sets) s.push_back(parse_override(kv));
  RunConfig cfg;
  apply_settings(cfg, s);
  omp_set_num_threads(static_cast<int>(cfg.threads));
  return cfg;
}

pipeline::DecompositionCache make_cache(const RunConfig& cfg) {
  return pipeline::DecompositionCache(
      pipeline::resolve_cache_dir(cfg.cache_dir.empty() ? fs::path(".fbp-cache") : cfg.cache_dir));
}

DatasetIndex require_index(const RunConfig& cfg) {
  if (cfg.index.empty()) throw ConfigError("no dataset index: set `index` in the config or pass --index");
  return pipeline::load_index(cfg.index);
}

Split make_split(const RunConfig& cfg, std::size_t n) {
  if (cfg.n_train == 0) {
    Split sp;
    for (std::size_t i = 0; i < n; ++i) sp.train.push_back(i);
    return sp;
  }
  return pipeline::split_train_test(n, cfg.n_train, cfg.split_seed);
}

void log_epoch(const std::string& tag, std::size_t epochs, const pipeline::EpochStats& s) {
  std::fprintf(stderr, "[%s] epoch %zu/%zu lr %.6g loss %.6f pearson %s\n", tag.c_str(), s.epoch, epochs, s.lr,
               s.train_loss, std::isfinite(s.test_pearson) ? std::to_string(s.test_pearson).c_str() : "nan (undefined)");
}

void write_split(const Split& sp, const DatasetIndex& idx, const fs::path& path) {
  std::ofstream out(path);
  out << "role,path\n";
  for (auto i : sp.train) out << "train," << idx.records[i].path.string() << "\n";
  for (auto i : sp.test) out << "test," << idx.records[i].path.string() << "\n";
}

template <typename T>
pipeline::EvalReport finish(const nn::LoadedModel<T>& model, const RunConfig& cfg, const DatasetIndex& idx,
                            const Split& sp, pipeline::DecompositionCache& cache, const fs::path& dir) {
  save_model(model.net, model.descriptor, dir / "model.fbpm");
  const auto& subset = sp.test.empty() ? sp.train : sp.test;
  auto report = pipeline::evaluate(model, idx, subset, cache,
                                   {cfg.train.multi_crop_eval, cfg.train.eval_crops, cfg.train.seed});
  report.config_fingerprint = cfg.train.fingerprint();
  pipeline::save_report(report, dir / "report.json");
  viz::scatter_report(report, dir / "scatter");
  if (report.pearson_r)
    std::fprintf(stderr, "pearson %.6f mae %.6f rmse %.6f over %zu samples\n", *report.pearson_r, report.mae,
                 report.rmse, report.samples.size());
  else
    std::fprintf(stderr, "pearson undefined (%s)\n", report.pearson_error.c_str());
  return report;
}

template <typename T>
void cmd_train(const RunConfig& cfg, bool resume) {
  const DatasetIndex idx = require_index(cfg);
  const Split sp = make_split(cfg, idx.size());
  prepare_run_dir(cfg.out_dir, resolved_text(cfg), resume);
  write_split(sp, idx, cfg.out_dir / "split.csv");
  auto cache = make_cache(cfg);
  auto r = pipeline::train<T>(cfg.train, idx, sp, cache, nullptr,
                              [&](const pipeline::EpochStats& s) { log_epoch("train", cfg.train.epochs, s); });
  pipeline::write_history_csv(r.history, cfg.out_dir / "history.csv");
  save_model(r.final_model.net, r.final_model.descriptor, cfg.out_dir / "model.final.fbpm");
  finish(r.best, cfg, idx, sp, cache, cfg.out_dir);
}

template <typename T>
void cmd_cascade(const RunConfig& cfg, bool resume) {
  const DatasetIndex idx = require_index(cfg);
  const Split sp = make_split(cfg, idx.size());
  prepare_run_dir(cfg.out_dir, resolved_text(cfg), resume);
  write_split(sp, idx, cfg.out_dir / "split.csv");
  auto cache = make_cache(cfg);
  auto stages = pipeline::cascade_train<T>(
      cfg.train, idx, sp, cfg.stages, cache, [&](std::size_t k, const pipeline::EpochStats& s) {
        log_epoch("stage " + std::to_string(k + 1) + " " + pipeline::to_string(cfg.stages[k]), cfg.train.epochs, s);
      });
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto& st = stages[k];
    const fs::path d = cfg.out_dir / ("stage" + std::to_string(k + 1) + "-" + pipeline::to_string(st.channels));
    fs::create_directories(d);
    pipeline::write_history_csv(st.result.history, d / "history.csv");
    save_model(st.result.best.net, st.result.best.descriptor, d / "model.fbpm");
    bool any_nan = false;
    for (const auto& h : st.result.history) any_nan |= !std::isfinite(h.test_pearson);
    if (any_nan)
      std::fprintf(stderr, "warning: stage %zu (%s) had epochs with undefined pearson (zero-variance predictions)\n",
                   k + 1, pipeline::to_string(st.channels).c_str());
  }
  finish(stages.back().result.best, cfg, idx, sp, cache, cfg.out_dir);
}

template <typename T>
void cmd_crossval(const RunConfig& cfg, bool resume) {
  const DatasetIndex idx = require_index(cfg);
  const auto folds = pipeline::kfold(idx.size(), cfg.folds, cfg.split_seed);
  prepare_run_dir(cfg.out_dir, resolved_text(cfg), resume);
  auto cache = make_cache(cfg);
  nlohmann::ordered_json summary;
  summary["folds"] = nlohmann::ordered_json::array();
  double sum = 0.0;
  std::size_t defined = 0;
  std::ofstream csv(cfg.out_dir / "crossval.csv");
  csv << "fold,pearson_r\n";
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const fs::path d = cfg.out_dir / ("fold" + std::to_string(f + 1));
    fs::create_directories(d);
    write_split(folds[f], idx, d / "split.csv");
    auto r = pipeline::train<T>(cfg.train, idx, folds[f], cache, nullptr, [&](const pipeline::EpochStats& s) {
      log_epoch("fold " + std::to_string(f + 1), cfg.train.epochs, s);
    });
    pipeline::write_history_csv(r.history, d / "history.csv");
    const auto rep = finish(r.best, cfg, idx, folds[f], cache, d);
    nlohmann::ordered_json e;
    e["fold"] = f + 1;
    e["pearson_r"] = rep.pearson_r ? nlohmann::ordered_json(*rep.pearson_r) : nlohmann::ordered_json(nullptr);
    summary["folds"].push_back(e);
    char line[64];
    std::snprintf(line, sizeof line, "%zu,%.17g\n", f + 1, rep.pearson_r ? *rep.pearson_r : std::nan(""));
    csv << line;
    if (rep.pearson_r) {
      sum += *rep.pearson_r;
      ++defined;
    }
  }
  const double mean = defined ? sum / static_cast<double>(defined) : std::nan("");
  summary["mean_pearson_r"] = defined ? nlohmann::ordered_json(mean) : nlohmann::ordered_json(nullptr);
  summary["defined_folds"] = defined;
  std::ofstream(cfg.out_dir / "crossval.json") << summary.dump(2) << "\n";
  char line[64];
  std::snprintf(line, sizeof line, "mean,%.17g\n", mean);
  csv << line;
  std::fprintf(stderr, "mean pearson over %zu of %zu folds: %.6f\n", defined, folds.size(), mean);
}

// Loads with the scalar width recorded in the file unless --precision was
// given explicitly, in which case a mismatch is an error.
template <typename F>
void with_model(const fs::path& path, const std::optional<std::string>& precision, F&& f) {
  std::size_t width = nn::model_scalar_bytes(path);
  if (precision) width = *precision == "f32" ? 4 : 8;
  if (width == 4)
    f(nn::load_model<float>(path));
  else
    f(nn::load_model<double>(path));
}

void cmd_eval(const RunConfig& cfg, const Globals& g, const fs::path& model_path, const std::string& subset_name,
              bool resume) {
  const DatasetIndex idx = require_index(cfg);
  prepare_run_dir(cfg.out_dir, resolved_text(cfg), resume);
  auto cache = make_cache(cfg);
  std::vector<std::size_t> subset;
  if (subset_name == "all") {
    for (std::size_t i = 0; i < idx.size(); ++i) subset.push_back(i);
  } else {
    const Split sp = make_split(cfg, idx.size());
    subset = subset_name == "train" ? sp.train : sp.test;
  }
  with_model(model_path, g.precision, [&](const auto& model) {
    auto report = pipeline::evaluate(model, idx, subset, cache,
                                     {cfg.train.multi_crop_eval, cfg.train.eval_crops, cfg.train.seed});
    report.config_fingerprint = cfg.train.fingerprint();
    pipeline::save_report(report, cfg.out_dir / "report.json");
    viz::scatter_report(report, cfg.out_dir / "scatter");
    if (report.pearson_r)
      std::fprintf(stderr, "pearson %.6f mae %.6f rmse %.6f over %zu samples\n", *report.pearson_r, report.mae,
                   report.rmse, report.samples.size());
    else
      std::fprintf(stderr, "pearson undefined (%s)\n", report.pearson_error.c_str());
  });
}

void cmd_predict(const RunConfig& cfg, const Globals& g, const fs::path& model_path,
                 const std::vector<std::string>& images) {
  auto cache = make_cache(cfg);
  with_model(model_path, g.precision, [&](const auto& model) {
    const auto set = pipeline::parse_channel_set(model.descriptor.channel_set);
    const auto& spec = model.net.spec();
    std::vector<Tensor<double>> inputs;
    for (const auto& p : images)
      inputs.push_back(pipeline::center_crop(pipeline::prepare_planes(cache.get(p, model.descriptor.wls, spec.stored_size),
                                                                      set, model.descriptor.means, model.descriptor.stds),
                                             spec.crop_size));
    const auto preds = pipeline::predict_inputs(model.net, inputs);
    for (std::size_t i = 0; i < images.size(); ++i)
      std::printf("%s %.4f\n", images[i].c_str(), std::clamp(preds[i], 1.0, 5.0));
  });
}

void cmd_visualize(const RunConfig& cfg, const Globals& g, const std::string& model_path, std::size_t layer,
                   bool post_pool, const std::vector<std::string>& images, const std::string& report_path) {
  fs::create_directories(cfg.out_dir);
  if (!report_path.empty()) {
    const auto rep = pipeline::load_report(report_path);
    viz::scatter_report(rep, cfg.out_dir / (fs::path(report_path).stem().string() + ".scatter"));
  }
  if (images.empty()) return;
  if (model_path.empty()) throw ConfigError("visualize: --model is required for feature maps");
  auto cache = make_cache(cfg);
  with_model(model_path, g.precision, [&](const auto& model) {
    const std::size_t convs = nn::conv_layer_count(model.net.spec());
    const std::size_t lo = layer == 0 ? 1 : layer, hi = layer == 0 ? convs : layer;
    for (const auto& img : images)
      for (std::size_t k = lo; k <= hi; ++k) {
        const auto grid =
            viz::feature_maps(model, img, k, cache, post_pool ? viz::MapStage::post_pool : viz::MapStage::pre_pool);
        const fs::path out = cfg.out_dir / (fs::path(img).stem().string() + ".conv" + std::to_string(k) + ".pgm");
        viz::write_grid(grid, out);
        std::fprintf(stderr, "%s: %zu maps of %zux%zu%s\n", out.string().c_str(), grid.count, grid.map_height,
                     grid.map_width, grid.scale > 1 ? " (upsampled x8, too small to interpret)" : "");
      }
  });
}

void cmd_decompose(const RunConfig& cfg, std::size_t size, bool with_lightness, const std::vector<std::string>& images) {
  fs::create_directories(cfg.out_dir);
  if (size == 0) size = nn::spec_by_name(cfg.train.spec_name).stored_size;
  for (const auto& p : images) {
    img::LightnessSplit raw;
    const auto ch = img::decompose(img::read_image(p), cfg.train.wls, size, &raw);
    const std::string stem = (cfg.out_dir / fs::path(p).stem()).string();
    img::write_pgm(raw.base, stem + ".base.pgm", 0.0, 100.0);
    img::write_pgm(raw.detail, stem + ".detail.pgm", -20.0, 20.0);
    img::write_pgm(ch.a, stem + ".a.pgm", -1.0, 1.0);
    img::write_pgm(ch.b, stem + ".b.pgm", -1.0, 1.0);
    if (with_lightness) img::write_pgm(raw.L, stem + ".L.pgm", 0.0, 100.0);
  }
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"fbp: facial beauty prediction with cascaded fine-tuning"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "flat key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "run seed");
  app.add_option("--threads", g.threads, "worker threads (results do not depend on it)");
  app.add_option("--out-dir", g.out_dir, "run or output directory");
  app.add_option("--precision", g.precision, "scalar type")->check(CLI::IsMember({"f32", "f64"}));
  app.add_option("--index", g.index, "dataset CSV (path,score)");
  app.add_option("--wls-lambda", g.wls_lambda, "WLS smoothness weight");
  app.add_option("--k", g.k, "cross-validation folds");
  app.add_option("--set", g.sets, "override one config key (key=value), repeatable");
  app.add_flag("--resume", g.resume, "rerun into an existing run directory with an identical config");

  auto* decompose = app.add_subcommand("decompose", "write base/detail/a/b planes of images as PGM");
  std::vector<std::string> images;
  std::size_t size = 0;
  bool with_lightness = false;
  decompose->add_option("images", images, "input PPM files")->required();
  decompose->add_option("--size", size, "output side length (default: stored size of the configured spec)");
  decompose->add_flag("--with-lightness", with_lightness, "also write the L plane as <stem>.L.pgm");

  auto* train = app.add_subcommand("train", "train one network");
  auto* cascade = app.add_subcommand("cascade", "cascaded fine-tuning over the configured stages");
  auto* crossval = app.add_subcommand("crossval", "k-fold cross-validation");

  std::string model_path, subset = "all";
  auto* eval = app.add_subcommand("eval", "evaluate a model on the dataset");
  eval->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--subset", subset, "records to evaluate")->check(CLI::IsMember({"all", "train", "test"}));

  auto* predict = app.add_subcommand("predict", "print `path score` for images");
  predict->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  predict->add_option("images", images, "input PPM files")->required();

  auto* visualize = app.add_subcommand("visualize", "feature-map grids and prediction scatter plots");
  std::size_t layer = 1;
  bool post_pool = false;
  std::string report_path;
  visualize->add_option("--model", model_path, "model file");
  visualize->add_option("--layer", layer, "convolution layer, 1-based; 0 for all");
  visualize->add_flag("--post-pool", post_pool, "show responses after pooling");
  visualize->add_option("--report", report_path, "EvalReport JSON to plot")->check(CLI::ExistingFile);
  visualize->add_option("images", images, "input PPM files");

  auto* synth = app.add_subcommand("synth", "generate the synthetic corpus into --out-dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = resolve(g);
    const bool f32 = cfg.precision == "f32";
    if (*decompose) cmd_decompose(cfg, size, with_lightness, images);
    if (*train) f32 ? cmd_train<float>(cfg, g.resume) : cmd_train<double>(cfg, g.resume);
    if (*cascade) f32 ? cmd_cascade<float>(cfg, g.resume) : cmd_cascade<double>(cfg, g.resume);
    if (*crossval) f32 ? cmd_crossval<float>(cfg, g.resume) : cmd_crossval<double>(cfg, g.resume);
    if (*eval) cmd_eval(cfg, g, model_path, subset, g.resume);
    if (*predict) cmd_predict(cfg, g, model_path, images);
    if (*visualize) cmd_visualize(cfg, g, model_path, layer, post_pool, images, report_path);
    if (*synth) {
      const auto idx = pipeline::synth_dataset(cfg.synth_n, cfg.synth_size, cfg.train.seed, cfg.out_dir);
      std::printf("%s\n", (cfg.out_dir / "index.csv").string().c_str());
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error:\n%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace fbp::cli
