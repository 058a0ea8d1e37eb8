#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "warploss/commands.hpp"
#include "warploss/datasets.hpp"
#include "warploss/landscape.hpp"

using namespace warploss;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_train_config() {
  return json{
      {"seed", 5},
      {"dataset",
       {{"type", "blobs"},
        {"classes", 4},
        {"per_class", 12},
        {"test_per_class", 6},
        {"dim", 2},
        {"center_scale", 10.0},
        {"noise_std", 0.5},
        {"min_center_separation", 3.0}}},
      {"embedder", {{"widths", {2, 16, 2}}, {"activation", "relu"}}},
      {"loss", {{"warp", "pwl(2.0,0.25,2.25,1.5) - t"}, {"temperature", 0.5}}},
      {"train",
       {{"batch_size", 8},
        {"samples_per_class", 2},
        {"lr_model", 0.03},
        {"lr_proxies", 0.01},
        {"phase1", {{"steps", 120}}},
        {"phase2", {{"steps", 60}, {"alpha", 1.0}, {"lr_multiplier", 0.3}}}}},
      {"metrics", {{"recall_ks", {1, 2}}}},
  };
}

}  // namespace

TEST_CASE("cmd_landscape writes a grid and extrema report") {
  const std::string out = fresh_dir("warploss_cmd_landscape");
  // Asymmetric ranges keep (0,0) off mirror-symmetric grid lines, so the
  // sqrt-warp minimum is a strict cell rather than an exact tie.
  json cfg = {{"p_c", {0.0, 0.0}},
              {"p_cprime", {4.0, 0.0}},
              {"warp", "t^0.5 - t^0.5"},
              {"temperature", 1.0},
              {"grid", {{"x_range", {-8.0, 8.25}}, {"y_range", {-8.0, 8.25}}, {"resolution", 64}}}};
  CHECK(cmd_landscape(cfg, out) == kOk);
  CHECK(fs::exists(out + "/grid.csv"));
  const json extrema = json::parse(slurp(out + "/extrema.json"));
  REQUIRE(extrema.at("minima").size() == 1);
  const double x = extrema.at("minima")[0].at("x").get<double>();
  const double y = extrema.at("minima")[0].at("y").get<double>();
  CHECK(std::hypot(x, y) <= extrema.at("cell_diagonal").get<double>());

  const LandscapeGrid grid = import_grid(out + "/grid.csv");
  CHECK(grid.spec.resolution == 64);
}

TEST_CASE("cmd_landscape places the warped minimum at alpha along the proxy line") {
  const std::string out = fresh_dir("warploss_cmd_landscape_warp");
  // Odd resolution puts y = 0 and x = -3 exactly on the grid.
  json cfg = {{"p_c", {0.0, 0.0}},
              {"p_cprime", {4.0, 0.0}},
              {"warp", "pwl(3.0,0.65,1.5,1.05) - t"},
              {"temperature", 1.0},
              {"grid", {{"x_range", {-8.0, 8.0}}, {"y_range", {-8.0, 8.0}}, {"resolution", 257}}}};
  REQUIRE(cmd_landscape(cfg, out) == kOk);
  const json extrema = json::parse(slurp(out + "/extrema.json"));
  const double cell = extrema.at("cell_diagonal").get<double>();
  REQUIRE(extrema.at("minima").size() >= 1);
  bool found_shifted = false;
  for (const auto& m : extrema.at("minima")) {
    const double x = m.at("x").get<double>(), y = m.at("y").get<double>();
    if (std::hypot(x + 3.0, y) <= cell) found_shifted = true;
    CHECK(std::abs(y) <= cell);  // everything detected hugs the proxy line
  }
  CHECK(found_shifted);
}

TEST_CASE("cmd_train flags the runaway half-warp as diverged") {
  const std::string out = fresh_dir("warploss_cmd_train_diverged");
  json cfg = small_train_config();
  cfg["loss"]["warp"] = "0.5*t - t";
  cfg["train"]["lr_model"] = 0.08;
  cfg["train"]["lr_proxies"] = 0.08;
  cfg["train"]["phase1"]["steps"] = 2000;
  cfg["train"]["phase2"] = {{"steps", 0}};
  cfg["train"]["divergence_dtp_threshold"] = 50.0;
  REQUIRE(cmd_train(cfg, out) == kOk);
  const json metrics = json::parse(slurp(out + "/metrics.json"));
  CHECK(metrics.at("diverged").get<bool>());

  // dtp trace rises from the pre-training baseline to past the threshold.
  std::stringstream ss(slurp(out + "/dtp_trace.csv"));
  std::string line;
  std::getline(ss, line);  // header
  std::vector<double> dtps;
  while (std::getline(ss, line))
    if (!line.empty()) dtps.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  REQUIRE(dtps.size() >= 2);
  CHECK(dtps.back() > 50.0);
  CHECK(dtps.back() >= 2.0 * dtps.front());
}

TEST_CASE("cmd_landscape reports missing fields with exit code 2") {
  const std::string out = fresh_dir("warploss_cmd_landscape_bad");
  json cfg = {{"p_c", {0.0, 0.0}}, {"p_cprime", {4.0, 0.0}},
              {"grid", {{"x_range", {-8.0, 8.0}}, {"y_range", {-8.0, 8.0}}, {"resolution", 64}}}};
  CHECK(cmd_landscape(cfg, out) == kConfigError);
  CHECK_FALSE(fs::exists(out + "/grid.csv"));  // no partial outputs
}

TEST_CASE("cmd_train end to end with metrics and determinism") {
  const std::string out_a = fresh_dir("warploss_cmd_train_a");
  const std::string out_b = fresh_dir("warploss_cmd_train_b");
  const json cfg = small_train_config();
  REQUIRE(cmd_train(cfg, out_a) == kOk);
  REQUIRE(cmd_train(cfg, out_b) == kOk);

  const json metrics = json::parse(slurp(out_a + "/metrics.json"));
  CHECK(metrics.contains("r_at_1"));
  CHECK(metrics.contains("nmi"));
  CHECK(metrics.contains("map_at_r"));
  CHECK(metrics.contains("avg_dtp"));
  CHECK(metrics.at("diverged").get<bool>() == false);

  for (const char* name : {"/metrics.json", "/checkpoint.json", "/loss_trace.csv",
                           "/dtp_trace.csv"})
    CHECK(slurp(out_a + name) == slurp(out_b + name));
}

TEST_CASE("cmd_train seed override changes the run") {
  const std::string out_a = fresh_dir("warploss_cmd_train_s1");
  const std::string out_b = fresh_dir("warploss_cmd_train_s2");
  const json cfg = small_train_config();
  REQUIRE(cmd_train(cfg, out_a, 5) == kOk);
  REQUIRE(cmd_train(cfg, out_b, 99) == kOk);
  CHECK(slurp(out_a + "/checkpoint.json") != slurp(out_b + "/checkpoint.json"));
}

TEST_CASE("cmd_train rejects inconsistent configs before compute") {
  const std::string out = fresh_dir("warploss_cmd_train_bad");
  json cfg = small_train_config();
  cfg["embedder"]["widths"] = {3, 8, 2};  // dataset is 2-D
  CHECK(cmd_train(cfg, out) == kConfigError);
  CHECK_FALSE(fs::exists(out + "/checkpoint.json"));

  json cfg2 = small_train_config();
  cfg2["loss"].erase("warp");
  CHECK(cmd_train(cfg2, out) == kConfigError);

  json cfg3 = small_train_config();
  cfg3["train"]["batch_size"] = 7;  // not divisible by samples_per_class
  CHECK(cmd_train(cfg3, out) == kConfigError);
}

TEST_CASE("cmd_eval reuses a checkpoint") {
  const std::string train_out = fresh_dir("warploss_cmd_eval_train");
  const json cfg = small_train_config();
  REQUIRE(cmd_train(cfg, train_out) == kOk);

  const std::string eval_out = fresh_dir("warploss_cmd_eval_out");
  json eval_cfg = {{"checkpoint", train_out + "/checkpoint.json"},
                   {"dataset", cfg.at("dataset")},
                   {"metrics", {{"recall_ks", {1}}}}};
  REQUIRE(cmd_eval(eval_cfg, eval_out) == kOk);
  const json train_metrics = json::parse(slurp(train_out + "/metrics.json"));
  const json eval_metrics = json::parse(slurp(eval_out + "/metrics.json"));
  // Same checkpoint, same dataset seeds: retrieval metrics agree.
  CHECK(eval_metrics.at("r_at_1") == train_metrics.at("r_at_1"));
  CHECK(eval_metrics.at("avg_dtp") == train_metrics.at("avg_dtp"));
}

TEST_CASE("cmd_sweep produces one row per value in order") {
  const std::string out = fresh_dir("warploss_cmd_sweep");
  json cfg = {{"parameter", "alpha"},
              {"values", {0.0, 1.0, 3.0, 1.0}},
              {"warp_base", {{"alpha", 2.0}, {"k1", 0.25}, {"k2", 2.25}, {"delta_k", 1.0}}},
              {"train_config", small_train_config()}};
  cfg["train_config"]["train"]["phase1"]["steps"] = 400;
  cfg["train_config"]["train"]["phase2"]["steps"] = 0;
  REQUIRE(cmd_sweep(cfg, out) == kOk);

  const std::string csv = slurp(out + "/sweep.csv");
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "alpha,r_at_1,nmi,map_at_r,rp,p_at_1,avg_dtp,diverged");
  std::vector<double> seen;
  std::vector<double> dtps;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    seen.push_back(std::stod(line.substr(0, line.find(','))));
    const std::size_t last = line.rfind(',');
    const std::size_t prev = line.rfind(',', last - 1);
    dtps.push_back(std::stod(line.substr(prev + 1, last - prev - 1)));
  }
  CHECK(seen == std::vector<double>{0.0, 1.0, 3.0, 1.0});
  // alpha = 0 means inward force everywhere, so it ends tightest.
  CHECK(dtps[0] < dtps[1]);
  CHECK(dtps[0] < dtps[2]);
  // Duplicate values produce identical rows (shared seed).
  CHECK(slurp(out + "/run_001/metrics.json") == slurp(out + "/run_003/metrics.json"));

  json bad = cfg;
  bad["parameter"] = "gamma";
  CHECK(cmd_sweep(bad, fresh_dir("warploss_cmd_sweep_bad")) == kConfigError);
}

TEST_CASE("cmd_train consumes csv datasets") {
  const std::string data_dir = fresh_dir("warploss_cmd_csv_data");
  // Reuse the blob generator to author the files, then train from disk.
  warploss::BlobSpec spec;
  spec.classes = 3;
  spec.per_class = 10;
  spec.dim = 2;
  spec.center_scale = 8.0;
  spec.noise_std = 0.5;
  spec.seed = 21;
  const auto [train_set, test_set] = warploss::make_blob_split(spec, 5);
  warploss::save_csv(data_dir + "/train.csv", train_set);
  warploss::save_csv(data_dir + "/test.csv", test_set);

  json cfg = small_train_config();
  cfg["dataset"] = {{"type", "csv"},
                    {"train_path", data_dir + "/train.csv"},
                    {"test_path", data_dir + "/test.csv"}};
  cfg["train"]["batch_size"] = 6;
  cfg["train"]["samples_per_class"] = 2;
  cfg["train"]["phase1"]["steps"] = 60;
  cfg["train"]["phase2"]["steps"] = 0;
  const std::string out = fresh_dir("warploss_cmd_csv_out");
  REQUIRE(cmd_train(cfg, out) == kOk);
  const json metrics = json::parse(slurp(out + "/metrics.json"));
  CHECK(metrics.contains("r_at_1"));

  cfg["dataset"]["train_path"] = data_dir + "/missing.csv";
  CHECK(cmd_train(cfg, out) != kOk);
}

TEST_CASE("cmd_train consumes idx datasets") {
  const std::string data_dir = fresh_dir("warploss_cmd_idx_data");
  // 8 tiny 2x2 images, two classes split by brightness.
  std::vector<unsigned char> pixels;
  std::vector<unsigned char> labels;
  for (int i = 0; i < 8; ++i) {
    const unsigned char base = i % 2 ? 200 : 30;
    for (int p = 0; p < 4; ++p) pixels.push_back(static_cast<unsigned char>(base + i + p));
    labels.push_back(i % 2);
  }
  {
    std::ofstream img(data_dir + "/images.idx", std::ios::binary);
    const auto be = [&](std::uint32_t v) {
      const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
      img.write(reinterpret_cast<const char*>(b), 4);
    };
    be(0x00000803u);
    be(8);
    be(2);
    be(2);
    img.write(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  }
  {
    std::ofstream lab(data_dir + "/labels.idx", std::ios::binary);
    const unsigned char header[8] = {0, 0, 8, 1, 0, 0, 0, 8};
    lab.write(reinterpret_cast<const char*>(header), 8);
    lab.write(reinterpret_cast<const char*>(labels.data()), labels.size());
  }

  json cfg = small_train_config();
  cfg["dataset"] = {{"type", "idx"},
                    {"train_images", data_dir + "/images.idx"},
                    {"train_labels", data_dir + "/labels.idx"}};
  cfg["embedder"]["widths"] = {4, 8, 2};
  cfg["train"]["batch_size"] = 4;
  cfg["train"]["samples_per_class"] = 2;
  cfg["train"]["phase1"]["steps"] = 40;
  cfg["train"]["phase2"]["steps"] = 0;
  const std::string out = fresh_dir("warploss_cmd_idx_out");
  REQUIRE(cmd_train(cfg, out) == kOk);
  const json metrics = json::parse(slurp(out + "/metrics.json"));
  CHECK(metrics.contains("r_at_1"));
}

TEST_CASE("cmd_verify runs the property suite") {
  const std::string out = fresh_dir("warploss_cmd_verify");
  CHECK(cmd_verify(out, 3) == kOk);
  const json report = json::parse(slurp(out + "/verify_report.json"));
  CHECK(report.at("pass").get<bool>());
  bool saw_witness = false;
  for (const auto& p : report.at("properties")) {
    CHECK(p.at("pass").get<bool>());
    if (p.at("property").get<std::string>().find("non-monotone") != std::string::npos)
      saw_witness = true;
  }
  CHECK(saw_witness);
}
