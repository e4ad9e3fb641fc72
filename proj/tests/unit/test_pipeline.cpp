#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "fbp/imageproc/pnm.hpp"
#include "fbp/pipeline/cache.hpp"
#include "fbp/pipeline/channels.hpp"
#include "fbp/pipeline/dataset.hpp"
#include "fbp/pipeline/evaluate.hpp"
#include "fbp/pipeline/pearson.hpp"
#include "fbp/pipeline/split.hpp"
#include "fbp/pipeline/synth.hpp"
#include "fbp/pipeline/train.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace fbp;
using namespace fbp::pipeline;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "fbp_test_pipeline" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

// A small corpus shared by the training tests, sized for the reduced net.
const DatasetIndex& toy_corpus() {
  static const DatasetIndex idx = synth_dataset(12, 14, 5, fresh_dir("toy_corpus"));
  return idx;
}

TrainConfig toy_config() {
  TrainConfig c;
  c.spec_name = "CNN-1-toy";
  c.epochs = 3;
  c.batch_size = 4;
  c.crops_per_image = 2;
  c.lr = 0.002;
  c.seed = 3;
  return c;
}

template <typename T>
bool same_net(const nn::Network<T>& a, const nn::Network<T>& b) {
  if (a.params().size() != b.params().size()) return false;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    const auto& p = a.params()[i];
    const auto& q = b.params()[i];
    if (p.weight.shape() != q.weight.shape() || p.bias.shape() != q.bias.shape()) return false;
    if (!p.weight.empty() && std::memcmp(p.weight.ptr(), q.weight.ptr(), p.weight.size() * sizeof(T)) != 0) return false;
    if (!p.bias.empty() && std::memcmp(p.bias.ptr(), q.bias.ptr(), p.bias.size() * sizeof(T)) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("dataset") {
  TEST_CASE("index parsing resolves relative paths") {
    const auto d = fresh_dir("index_ok");
    write_text(d / "index.csv", "path,score\nx/a.ppm,2.5\nb.ppm,5\n");
    const auto idx = load_index(d / "index.csv");
    REQUIRE(idx.size() == 2);
    CHECK(idx.records[0].path == d / "x/a.ppm");
    CHECK(idx.records[1].score == 5.0);

    write_index(idx, d / "copy.csv");
    const auto back = load_index(d / "copy.csv");
    CHECK(back.records[0].path == idx.records[0].path);
    CHECK(back.records[1].score == idx.records[1].score);
  }

  TEST_CASE("index validation names the row") {
    const auto d = fresh_dir("index_bad");
    auto rejects = [&](const std::string& body, const std::string& needle) {
      write_text(d / "i.csv", body);
      try {
        load_index(d / "i.csv");
        return false;
      } catch (const ValidationError& e) {
        return std::string(e.what()).find(needle) != std::string::npos;
      }
    };
    CHECK(rejects("path,score\na.ppm,0.5\n", "row 2"));
    CHECK(rejects("path,score\na.ppm,3\nb.ppm,5.01\n", "row 3"));
    CHECK(rejects("path,score\na.ppm,3\na.ppm,4\n", "duplicate"));
    CHECK(rejects("file,value\na.ppm,3\n", "header"));
    CHECK(rejects("path,score\na.ppm,abc\n", "row 2"));
    CHECK_THROWS_AS(load_index(d / "missing.csv"), IoError);
  }
}

TEST_SUITE("split") {
  TEST_CASE("shuffle is a seeded permutation") {
    const auto p = shuffled_indices(100, 4);
    auto sorted = p;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> iota(100);
    std::iota(iota.begin(), iota.end(), 0);
    CHECK(sorted == iota);
    CHECK(p == shuffled_indices(100, 4));
    CHECK(p != shuffled_indices(100, 5));
  }

  TEST_CASE("train/test split of 500 records") {
    const auto s = split_train_test(500, 400, 1);
    CHECK(s.train.size() == 400);
    CHECK(s.test.size() == 100);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 500);
    CHECK_THROWS_AS(split_train_test(10, 11, 1), ArgumentError);
  }

  TEST_CASE("k-fold partitions") {
    const auto folds = kfold(7, 3, 2);
    REQUIRE(folds.size() == 3);
    CHECK(folds[0].test.size() == 3);
    CHECK(folds[1].test.size() == 2);
    CHECK(folds[2].test.size() == 2);
    std::multiset<std::size_t> tests;
    for (const auto& f : folds) {
      CHECK(f.train.size() + f.test.size() == 7);
      std::set<std::size_t> u(f.train.begin(), f.train.end());
      for (std::size_t t : f.test) CHECK(u.count(t) == 0);
      tests.insert(f.test.begin(), f.test.end());
    }
    CHECK(tests.size() == 7);
    CHECK(std::set<std::size_t>(tests.begin(), tests.end()).size() == 7);
    CHECK_THROWS_AS(kfold(3, 4, 1), ArgumentError);
    CHECK_THROWS_AS(kfold(3, 1, 1), ArgumentError);
  }
}

TEST_SUITE("crops") {
  Tensor<double> ramp(std::size_t C, std::size_t S) {
    Tensor<double> t({C, S, S});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
    return t;
  }

  TEST_CASE("offsets stay in range and the center is fixed") {
    Rng rng(1);
    std::size_t lo = 99, hi = 0;
    for (int i = 0; i < 5000; ++i) {
      const auto o = random_offset(256, 227, rng);
      lo = std::min({lo, o.top, o.left});
      hi = std::max({hi, o.top, o.left});
    }
    CHECK(lo == 0);
    CHECK(hi == 29);
    CHECK(center_offset(256, 227) == CropOffset{14, 14});
    CHECK(center_offset(56, 48) == CropOffset{4, 4});
  }

  TEST_CASE("full-size crops are the input") {
    Rng rng(2);
    const auto planes = ramp(2, 6);
    for (const auto& c : make_training_crops(planes, 6, 4, rng)) CHECK(c == planes);
    CHECK(center_crop(planes, 6) == planes);
    CHECK_THROWS(make_training_crops(planes, 7, 1, rng));
  }

  TEST_CASE("planes of one crop share the offset") {
    Rng rng(3);
    const auto planes = ramp(3, 10);
    for (const auto& c : make_training_crops(planes, 4, 20, rng)) {
      REQUIRE(c.shape() == Shape{3, 4, 4});
      // Plane k is plane 0 shifted by k * 100 in the ramp.
      for (std::size_t i = 0; i < 16; ++i) {
        CHECK(c[16 + i] == c[i] + 100);
        CHECK(c[32 + i] == c[i] + 200);
      }
    }
  }

  TEST_CASE("channel sets") {
    CHECK(channel_count(parse_channel_set("rgb")) == 3);
    CHECK(channel_count(parse_channel_set("combined")) == 5);
    CHECK(parse_channel_set("rgb+base+detail") == ChannelSet::combined);
    CHECK(to_string(ChannelSet::detail) == "detail");
    CHECK_THROWS_AS(parse_channel_set("hsv"), ArgumentError);
  }
}

TEST_SUITE("pearson") {
  TEST_CASE("hand example") {
    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 4, 3, 5};
    CHECK(pearson(x, y) == doctest::Approx(0.8).epsilon(1e-14));
    const std::vector<double> u{1, 2, 3, 4}, v{1, 3, 2, 4};
    CHECK(std::abs(pearson(u, v) - 0.8) < 1e-12);
  }

  TEST_CASE("matches the two-pass oracle") {
    Rng rng(4);
    for (int t = 0; t < 200; ++t) {
      const std::size_t n = 2 + rng.next_below(300);
      std::vector<double> x(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = 1e3 + rng.next_double();
        y[i] = 0.3 * x[i] + rng.next_double();
      }
      CHECK(std::abs(pearson(x, y) - oracle::pearson(x, y)) < 1e-12);
    }
  }

  TEST_CASE("invariant under positive affine maps, odd under negation") {
    Rng rng(5);
    std::vector<double> x(50), y(50), ya(50), yn(50);
    for (std::size_t i = 0; i < 50; ++i) {
      x[i] = rng.next_double();
      y[i] = x[i] + 0.5 * rng.next_double();
      ya[i] = 3.5 * y[i] - 2.0;
      yn[i] = -y[i];
    }
    CHECK(pearson(x, ya) == doctest::Approx(pearson(x, y)).epsilon(1e-12));
    CHECK(pearson(x, yn) == doctest::Approx(-pearson(x, y)).epsilon(1e-12));
    CHECK(pearson(x, x) == doctest::Approx(1.0));
  }

  TEST_CASE("undefined cases") {
    const std::vector<double> x{1, 2, 3}, c{2, 2, 2};
    CHECK_THROWS_AS(pearson(x, c), UndefinedCorrelationError);
    CHECK_THROWS_AS(pearson(c, x), UndefinedCorrelationError);
    CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), ArgumentError);
    CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), ArgumentError);
  }
}

TEST_SUITE("synthetic corpus") {
  TEST_CASE("same seed gives identical files") {
    const auto a = synth_dataset(4, 20, 9, fresh_dir("synth_a"));
    const auto b = synth_dataset(4, 20, 9, fresh_dir("synth_b"));
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(a.records[i].score == b.records[i].score);
      const auto ra = img::read_pnm(a.records[i].path), rb = img::read_pnm(b.records[i].path);
      CHECK(ra.bytes == rb.bytes);
    }
    CHECK(a.provenance == "synthetic");
    CHECK(load_index(a.records[0].path.parent_path() / "index.csv").size() == 4);
    CHECK_THROWS_AS(synth_dataset(1, 20, 9, fresh_dir("synth_c")), ArgumentError);
  }

  TEST_CASE("scores are in range and follow lightness") {
    const auto idx = synth_dataset(100, 24, 11, fresh_dir("synth_corr"));
    std::vector<double> score, light;
    for (const auto& r : idx.records) {
      CHECK(r.score >= 1.0);
      CHECK(r.score <= 5.0);
      const auto im = img::read_image(r.path);
      score.push_back(r.score);
      light.push_back(std::accumulate(im.pixels.begin(), im.pixels.end(), 0.0) / static_cast<double>(im.pixels.size()));
    }
    const double rho = pearson(score, light);
    MESSAGE("score vs mean intensity: " << rho);
    CHECK(rho > 0.6);
  }
}

TEST_SUITE("cache") {
  TEST_CASE("disk layer hits and recomputes corrupt files") {
    const auto& idx = toy_corpus();
    const auto dir = fresh_dir("cache");
    const img::WlsParams p;
    img::FaceChannels first;
    {
      DecompositionCache c(dir);
      first = c.get(idx.records[0].path, p, 14);
      c.get(idx.records[0].path, p, 14);
      CHECK(c.computed() == 1);
      CHECK(c.disk_hits() == 0);
    }
    {
      DecompositionCache c(dir);
      const auto& again = c.get(idx.records[0].path, p, 14);
      CHECK(c.disk_hits() == 1);
      CHECK(again.detail == first.detail);
      CHECK(again.rgb == first.rgb);
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) files.push_back(e.path());
    REQUIRE(files.size() == 1);
    {
      std::fstream f(files[0], std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(100);
      f.put('\x7f');
    }
    DecompositionCache c(dir);
    const auto& redone = c.get(idx.records[0].path, p, 14);
    CHECK(c.computed() == 1);
    CHECK(c.disk_hits() == 0);
    CHECK(redone.detail == first.detail);
    // Different parameters are a different key.
    img::WlsParams q;
    q.lambda = 0.5;
    c.get(idx.records[0].path, q, 14);
    CHECK(c.computed() == 2);
    CHECK(DecompositionCache::params_fingerprint(p, 14) != DecompositionCache::params_fingerprint(q, 14));
    CHECK(DecompositionCache::params_fingerprint(p, 14) != DecompositionCache::params_fingerprint(p, 16));
  }
}

TEST_SUITE("evaluate") {
  TEST_CASE("constant model reports an undefined correlation") {
    const auto& idx = toy_corpus();
    nn::Network<double> net(nn::cnn1_toy(), 1, 1);
    for (auto& p : net.mutable_params()) {
      std::fill(p.weight.data().begin(), p.weight.data().end(), 0.0);
      std::fill(p.bias.data().begin(), p.bias.data().end(), 0.0);
    }
    net.mutable_params().back().bias[0] = 3.0;
    nn::ChannelDescriptor d;
    d.channel_set = "detail";
    d.means = {0.0};
    d.stds = {1.0};
    const nn::LoadedModel<double> model{net, d};
    DecompositionCache cache;
    std::vector<std::size_t> all(idx.size());
    std::iota(all.begin(), all.end(), 0);
    auto r = evaluate(model, idx, all, cache);
    CHECK(r.samples.size() == idx.size());
    CHECK_FALSE(r.pearson_r.has_value());
    CHECK_FALSE(r.pearson_error.empty());
    for (const auto& s : r.samples) CHECK(s.prediction == 3.0);

    r.config_fingerprint = "abc";
    const auto back = report_from_json(report_to_json(r));
    CHECK(back.config_fingerprint == "abc");
    CHECK_FALSE(back.pearson_r.has_value());
    CHECK(back.mae == r.mae);
    CHECK(back.samples.size() == r.samples.size());
    CHECK(back.samples[3].truth == r.samples[3].truth);
    CHECK_THROWS_AS(report_from_json("{\"mae\": 1}"), FormatError);
  }

  TEST_CASE("standardization") {
    img::FaceChannels ch;
    ch.size = 2;
    ch.detail = Tensor<double>({1, 2, 2}, {1, 3, 5, 7});
    const std::vector<double> m{4}, s{2};
    CHECK(prepare_planes(ch, ChannelSet::detail, m, s) == Tensor<double>({1, 2, 2}, {-1.5, -0.5, 0.5, 1.5}));
    CHECK(prepare_planes(ch, ChannelSet::detail, m) == Tensor<double>({1, 2, 2}, {-3, -1, 1, 3}));
    CHECK_THROWS_AS(prepare_planes(ch, ChannelSet::detail, std::vector<double>{1, 2}), ShapeError);
  }
}

TEST_SUITE("training") {
  TEST_CASE("config validation") {
    TrainConfig c = toy_config();
    CHECK_NOTHROW(c.validate());
    c.lr = 0;
    CHECK_THROWS(c.validate());
    c = toy_config();
    c.dropout_keep = 0;
    CHECK_THROWS(c.validate());
    c = toy_config();
    c.spec_name = "nope";
    CHECK_THROWS(c.validate());
    CHECK(toy_config().fingerprint() == toy_config().fingerprint());
    c = toy_config();
    c.seed = 4;
    CHECK(c.fingerprint() != toy_config().fingerprint());
  }

  TEST_CASE("channel statistics") {
    const auto& idx = toy_corpus();
    DecompositionCache cache;
    const std::vector<std::size_t> recs{0, 1, 2};
    const auto st = channel_stats(idx, recs, ChannelSet::rgb, img::WlsParams{}, 14, cache);
    REQUIRE(st.means.size() == 3);
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0, q = 0, n = 0;
      for (std::size_t r : recs) {
        const auto& ch = cache.get(idx.records[r].path, img::WlsParams{}, 14);
        for (std::size_t i = 0; i < 196; ++i) {
          const double v = ch.rgb[c * 196 + i];
          s += v;
          n += 1;
        }
      }
      const double m = s / n;
      for (std::size_t r : recs) {
        const auto& ch = cache.get(idx.records[r].path, img::WlsParams{}, 14);
        for (std::size_t i = 0; i < 196; ++i) q += (ch.rgb[c * 196 + i] - m) * (ch.rgb[c * 196 + i] - m);
      }
      CHECK(st.means[c] == doctest::Approx(m).epsilon(1e-12));
      CHECK(st.stds[c] == doctest::Approx(std::sqrt(q / n)).epsilon(1e-12));
    }
  }

  TEST_CASE("training is deterministic and reduces the loss") {
    const auto& idx = toy_corpus();
    const Split split = split_train_test(idx.size(), 8, 1);
    TrainConfig cfg = toy_config();
    cfg.epochs = 6;
    DecompositionCache cache;
    const auto a = train<double>(cfg, idx, split, cache);
    const auto b = train<double>(cfg, idx, split, cache);
    REQUIRE(a.history.size() == 6);
    CHECK(same_net(a.final_model.net, b.final_model.net));
    CHECK(same_net(a.best.net, b.best.net));
    for (std::size_t e = 0; e < 6; ++e) {
      CHECK(a.history[e].train_loss == b.history[e].train_loss);
      CHECK(a.history[e].epoch == e + 1);
    }
    CHECK(a.history.back().train_loss < a.history.front().train_loss);
    CHECK(a.best.descriptor.channel_set == "detail");
    CHECK(a.best.descriptor.means.size() == 1);
    CHECK(a.best_epoch >= 1);
    CHECK(a.best_epoch <= 6);

    const auto csv = fresh_dir("history") / "h.csv";
    write_history_csv(a.history, csv);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,train_loss,test_pearson");
  }

  TEST_CASE("early stop and learning-rate steps") {
    const auto& idx = toy_corpus();
    const Split split = split_train_test(idx.size(), 8, 1);
    TrainConfig cfg = toy_config();
    cfg.epochs = 4;
    cfg.lr_step = 2;
    cfg.lr_gamma = 0.5;
    DecompositionCache cache;
    const auto r = train<double>(cfg, idx, split, cache);
    CHECK(r.history[0].lr == 0.002);
    CHECK(r.history[1].lr == 0.002);
    CHECK(r.history[2].lr == 0.001);

    // Stop at the best correlation of a full run: the stopped run is the
    // full run truncated at the first epoch that reaches it.
    double best = 0.0;
    for (const auto& h : r.history)
      if (std::isfinite(h.test_pearson)) best = std::max(best, h.test_pearson);
    REQUIRE(best > 0.0);
    std::size_t first = 0;
    while (!(r.history[first].test_pearson >= best)) ++first;
    cfg.early_stop_pearson = best;
    const auto s = train<double>(cfg, idx, split, cache);
    CHECK(s.history.size() == first + 1);
    CHECK(s.history.back().train_loss == r.history[first].train_loss);
  }

  TEST_CASE("single-stage cascade equals plain training") {
    const auto& idx = toy_corpus();
    const Split split = split_train_test(idx.size(), 8, 1);
    const TrainConfig cfg = toy_config();
    DecompositionCache cache;
    const auto plain = train<double>(cfg, idx, split, cache);
    const auto stages = cascade_train<double>(cfg, idx, split, {ChannelSet::detail}, cache);
    REQUIRE(stages.size() == 1);
    CHECK(same_net(plain.final_model.net, stages[0].result.final_model.net));
  }

  TEST_CASE("cascade carries deeper layers into the next stage") {
    const auto& idx = toy_corpus();
    const Split split = split_train_test(idx.size(), 8, 1);
    const TrainConfig cfg = toy_config();
    DecompositionCache cache;
    const auto st = cascade_train<double>(cfg, idx, split, {ChannelSet::detail, ChannelSet::rgb}, cache);
    REQUIRE(st.size() == 2);
    const auto& prev = st[0].result.best.net.params();
    const auto& start = st[1].initial.params();
    CHECK(start[0].weight.shape() == Shape{50, 3, 3, 3});
    for (std::size_t i = 1; i < prev.size(); ++i) {
      CHECK(prev[i].weight == start[i].weight);
      CHECK(prev[i].bias == start[i].bias);
    }
    CHECK(st[1].result.history.front().lr == doctest::Approx(cfg.lr * cfg.finetune_lr_scale));
    CHECK(st[1].result.best.descriptor.channel_set == "rgb");
  }

  TEST_CASE("a runaway learning rate is reported") {
    const auto& idx = toy_corpus();
    const Split split = split_train_test(idx.size(), 8, 1);
    TrainConfig cfg = toy_config();
    cfg.lr = 50.0;
    cfg.momentum = 0.0;
    cfg.epochs = 20;
    DecompositionCache cache;
    CHECK_THROWS_AS(train<double>(cfg, idx, split, cache), NumericError);
  }
}
