#include "warploss/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include "warploss/datasets.hpp"
#include "warploss/landscape.hpp"
#include "warploss/metrics.hpp"
#include "warploss/rng.hpp"
#include "warploss/trainer.hpp"

namespace warploss {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError("config: missing field '" + key + "' in " + where);
  return j.at(key);
}

template <typename T>
T require_as(const json& j, const std::string& key, const std::string& where) {
  try {
    return require(j, key, where).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: field '" + key + "' in " + where + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: field '" + key + "': " + e.what());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

WarpPair parse_warp_field(const json& j, const std::string& where) {
  const std::string expr = require_as<std::string>(j, "warp", where);
  try {
    return parse_warp_pair(expr);
  } catch (const WarpParseError& e) {
    throw ConfigError("config: field 'warp' in " + where + ": " + e.what());
  }
}

LossConfig parse_loss_config(const json& j, const std::string& where) {
  LossConfig cfg;
  cfg.warp = parse_warp_field(j, where);
  cfg.temperature = get_or<double>(j, "temperature", 1.0);
  cfg.stability_shift = get_or<bool>(j, "stability_shift", true);
  if (!(cfg.temperature > 0.0))
    throw ConfigError("config: 'temperature' in " + where + " must be > 0");
  return cfg;
}

int map_exceptions(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const WarpParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  }
}

// ---------------------------------------------------------------------------
// train / eval plumbing

struct SplitData {
  Dataset train;
  Dataset test;
};

SplitData load_dataset(const json& d) {
  const std::string type = require_as<std::string>(d, "type", "dataset");
  SplitData out;
  if (type == "blobs") {
    BlobSpec spec;
    spec.classes = require_as<int>(d, "classes", "dataset");
    spec.per_class = require_as<int>(d, "per_class", "dataset");
    spec.dim = require_as<int>(d, "dim", "dataset");
    spec.center_scale = require_as<double>(d, "center_scale", "dataset");
    spec.noise_std = require_as<double>(d, "noise_std", "dataset");
    spec.seed = get_or<std::uint64_t>(d, "seed", 0);
    spec.min_center_separation = get_or<double>(d, "min_center_separation", 0.0);
    const int test_per_class = get_or<int>(d, "test_per_class", 0);
    if (test_per_class > 0) {
      auto [train, test] = make_blob_split(spec, test_per_class);
      out.train = std::move(train);
      out.test = std::move(test);
    } else {
      out.train = make_blobs(spec);
      out.test = out.train;
      out.test.split = "test";
    }
    return out;
  }
  if (type == "csv") {
    out.train = load_csv(require_as<std::string>(d, "train_path", "dataset"));
    if (d.contains("test_path")) {
      out.test = load_csv(d.at("test_path").get<std::string>());
    } else {
      out.test = out.train;
    }
    out.test.split = "test";
    return out;
  }
  if (type == "idx") {
    const std::size_t limit = get_or<std::uint64_t>(d, "limit", 0);
    out.train = load_idx(require_as<std::string>(d, "train_images", "dataset"),
                         require_as<std::string>(d, "train_labels", "dataset"), limit);
    if (d.contains("test_images")) {
      out.test = load_idx(d.at("test_images").get<std::string>(),
                          require_as<std::string>(d, "test_labels", "dataset"), limit);
    } else {
      out.test = out.train;
    }
    out.test.split = "test";
    return out;
  }
  throw ConfigError("config: unknown dataset type '" + type + "'");
}

EmbedderSpec parse_embedder(const json& e) {
  EmbedderSpec spec;
  spec.widths = require_as<std::vector<int>>(e, "widths", "embedder");
  spec.activation = activation_from_string(get_or<std::string>(e, "activation", "relu"));
  spec.layer_norm_output = get_or<bool>(e, "layer_norm_output", false);
  spec.validate();
  return spec;
}

// Rebuilds a piecewise-linear f1 at a new point of attraction, preserving
// the delta-to-handicap ratio of the base warp.
WarpSpec retarget_alpha(const WarpSpec& f1, double new_alpha) {
  if (f1.kind() != WarpSpec::Kind::kPiecewiseLinear)
    throw ConfigError("config: a phase 'alpha' override requires a pwl(...) f1 warp");
  const double margin_k = f1.delta() / ((1.0 - f1.k1()) * f1.alpha());
  return WarpSpec::piecewise_linear(new_alpha, f1.k1(), f1.k2(),
                                    margin_k * (1.0 - f1.k1()) * new_alpha);
}

PhaseConfig parse_phase(const json& p, const LossConfig& base, const std::string& where) {
  PhaseConfig phase;
  phase.steps = require_as<int>(p, "steps", where);
  phase.loss = base;
  phase.lr_multiplier = get_or<double>(p, "lr_multiplier", 1.0);
  if (p.contains("alpha"))
    phase.loss.warp.f1 = retarget_alpha(base.warp.f1, p.at("alpha").get<double>());
  if (p.contains("temperature")) phase.loss.temperature = p.at("temperature").get<double>();
  return phase;
}

struct TrainSetup {
  SplitData data;
  EmbedderSpec embedder;
  TrainConfig train_cfg;
  std::vector<int> recall_ks;
  std::uint64_t seed = 0;
};

TrainSetup parse_train_setup(const json& config, std::optional<std::uint64_t> seed_override) {
  TrainSetup setup;
  setup.seed = seed_override ? *seed_override : get_or<std::uint64_t>(config, "seed", 0);

  json dataset_cfg = require(config, "dataset", "config");
  if (dataset_cfg.is_object() && dataset_cfg.value("type", "") == "blobs" &&
      !dataset_cfg.contains("seed"))
    dataset_cfg["seed"] = setup.seed;
  setup.data = load_dataset(dataset_cfg);
  setup.embedder = parse_embedder(require(config, "embedder", "config"));
  if (setup.embedder.input_dim() != setup.data.train.dim())
    throw ConfigError("config: embedder input width " +
                      std::to_string(setup.embedder.input_dim()) +
                      " does not match dataset dim " + std::to_string(setup.data.train.dim()));

  const LossConfig base = parse_loss_config(require(config, "loss", "config"), "loss");
  const json& t = require(config, "train", "config");
  TrainConfig& tc = setup.train_cfg;
  tc.seed = setup.seed;
  tc.batch_size = require_as<int>(t, "batch_size", "train");
  tc.samples_per_class = require_as<int>(t, "samples_per_class", "train");
  tc.lr_model = require_as<double>(t, "lr_model", "train");
  tc.lr_proxies = require_as<double>(t, "lr_proxies", "train");
  tc.beta1 = get_or<double>(t, "beta1", 0.9);
  tc.beta2 = get_or<double>(t, "beta2", 0.999);
  tc.adam_epsilon = get_or<double>(t, "adam_epsilon", 1e-8);
  tc.phase1 = parse_phase(require(t, "phase1", "train"), base, "train.phase1");
  if (t.contains("phase2")) {
    tc.phase2 = parse_phase(t.at("phase2"), base, "train.phase2");
  } else {
    tc.phase2.steps = 0;
    tc.phase2.loss = base;
  }
  if (t.contains("divergence_dtp_threshold"))
    tc.divergence_dtp_threshold = t.at("divergence_dtp_threshold").get<double>();
  tc.validate();

  setup.recall_ks = {1, 2, 4};
  if (config.contains("metrics"))
    setup.recall_ks = get_or<std::vector<int>>(config.at("metrics"), "recall_ks", setup.recall_ks);
  return setup;
}

json evaluate_metrics(const EmbedderSpec& spec, const EmbedderParams& params,
                      const Dataset& test, const std::vector<int>& recall_ks,
                      double train_avg_dtp, std::uint64_t seed) {
  LabeledBatch batch;
  batch.embeddings = forward_points(spec, params, test.features);
  batch.labels = test.labels;

  json out;
  const RetrievalResult r =
      evaluate_retrieval(batch, recall_ks, derive_seed(seed, RngStream::kKmeans));
  for (const auto& [k, v] : r.recall_at) out["r_at_" + std::to_string(k)] = v;
  out["nmi"] = r.nmi;
  out["map_at_r"] = r.map_at_r;
  out["rp"] = r.rp;
  out["p_at_1"] = r.p_at_1;
  out["avg_dtp"] = train_avg_dtp;
  return out;
}

std::string trace_loss_csv(const TrainTrace& trace) {
  std::string out = "step,loss\n";
  char buf[64];
  for (std::size_t s = 0; s < trace.step_losses.size(); ++s) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", s, trace.step_losses[s]);
    out += buf;
  }
  return out;
}

std::string trace_dtp_csv(const TrainTrace& trace) {
  std::string out = "epoch,steps,avg_dtp\n";
  char buf[80];
  for (std::size_t e = 0; e < trace.epoch_dtp.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%d,%.17g\n", e, trace.epoch_dtp[e].first,
                  trace.epoch_dtp[e].second);
    out += buf;
  }
  return out;
}

json run_train_setup(const TrainSetup& setup, const std::string& out_dir) {
  const TrainTrace trace =
      train(setup.data.train.features, setup.data.train.labels, setup.embedder, setup.train_cfg);

  const double final_dtp = trace.epoch_dtp.empty() ? 0.0 : trace.epoch_dtp.back().second;
  json metrics =
      evaluate_metrics(setup.embedder, trace.params, setup.data.test, setup.recall_ks,
                       final_dtp, setup.seed);
  metrics["diverged"] = trace.diverged;

  Checkpoint ckpt;
  ckpt.spec = setup.embedder;
  ckpt.params = trace.params;
  ckpt.proxies = trace.proxies;
  ckpt.adam_model = trace.adam_model;
  ckpt.adam_proxies = trace.adam_proxies;
  ckpt.batch_rng_state = trace.batch_rng_state;
  ckpt.seed = trace.seed;

  ensure_dir(out_dir);
  save_checkpoint(out_dir + "/checkpoint.json", ckpt);
  write_text(out_dir + "/loss_trace.csv", trace_loss_csv(trace));
  write_text(out_dir + "/dtp_trace.csv", trace_dtp_csv(trace));
  write_json(out_dir + "/metrics.json", metrics);
  return metrics;
}

// ---------------------------------------------------------------------------
// verify suite

// expect_pass: all 20 random pairs must keep their extrema on the line.
// !expect_pass: at least one pair must exhibit an off-line extremum (the
// converse only claims existence of a witness).
json line_extrema_property(const std::string& name, const std::function<double(double)>& f,
                    std::uint64_t seed, bool expect_pass) {
  Rng rng(derive_seed(seed, RngStream::kVerify));
  int checked = 0;
  bool found_witness = false;
  json cases = json::array();
  for (int trial = 0; trial < 20; ++trial) {
    const double d = rng.uniform(1.0, 8.0);
    const double cx = rng.uniform(-2.0, 2.0), cy = rng.uniform(-2.0, 2.0);
    const double angle = rng.uniform(0.0, 6.283185307179586);
    const Vec p_c{cx + 0.5 * d * std::cos(angle), cy + 0.5 * d * std::sin(angle)};
    const Vec p_cp{cx - 0.5 * d * std::cos(angle), cy - 0.5 * d * std::sin(angle)};
    const ProxyPair pair(p_c, p_cp);
    const double half = 1.25 * d;
    GridSpec grid{cx - half, cx + half, cy - half, cy + half, 512};
    const LineExtremaReport report = verify_line_extrema(f, pair, grid, seed + trial);
    ++checked;
    if (!report.pass) {
      found_witness = true;
      json c;
      c["separation"] = d;
      c["off_line_extrema"] = report.off_line_extrema.size();
      cases.push_back(c);
      if (!expect_pass) break;
    }
  }
  json out;
  out["property"] = name;
  out["pairs_checked"] = checked;
  out["expected"] = expect_pass ? "on-line extrema only" : "off-line extremum exists";
  out["pass"] = expect_pass ? !found_witness : found_witness;
  if (expect_pass && !cases.empty()) out["unexpected_cases"] = cases;
  return out;
}

json reversal_property(std::uint64_t seed) {
  json out;
  out["property"] = "minimum created at the point of reversal";
  bool ok = true;
  json cases = json::array();

  const auto run_case = [&](double alpha, double k1, double k2, const ProxyPair& pair) {
    const WarpPair warp{WarpSpec::piecewise_linear(alpha, k1, k2, default_delta(alpha, k1)),
                        WarpSpec::identity()};
    const ReversalReport r = verify_reversal_minimum(warp, pair);
    if (!r.pass || !(r.slope_before < 0.0) || !(r.slope_after > 0.0)) {
      ok = false;
      cases.push_back({{"alpha", alpha},
                       {"k1", k1},
                       {"k2", k2},
                       {"argmin", r.argmin_t},
                       {"slope_before", r.slope_before},
                       {"slope_after", r.slope_after}});
    }
  };

  run_case(3.0, 0.65, 1.5, ProxyPair(Vec{0, 0}, Vec{4, 0}));
  Rng rng(derive_seed(seed ^ 0x9E37, RngStream::kVerify));
  for (int i = 0; i < 50; ++i) {
    const double alpha = rng.uniform(0.5, 8.0);
    const double k1 = rng.uniform(0.05, 0.95);
    const double k2 = rng.uniform(1.05, 4.0);
    const double d = rng.uniform(1.0, 10.0);
    run_case(alpha, k1, k2, ProxyPair(Vec{0, 0}, Vec{d, 0}));
  }
  out["cases_checked"] = 51;
  out["pass"] = ok;
  if (!cases.empty()) out["failures"] = cases;
  return out;
}

json taxonomy_property() {
  json out;
  out["property"] = "landscape taxonomy along the proxy line";
  const ProxyPair pair(Vec{0, 0}, Vec{4, 0});
  bool ok = true;
  json detail;

  const auto profile = [&](const WarpSpec& f1, const WarpSpec& f2, double t0, double t1, int n) {
    return evaluate_along_line(pair, LossConfig{WarpPair{f1, f2}, 1.0, true}, t0, t1, n);
  };
  const auto argmin_of = [](const std::vector<std::pair<double, double>>& prof) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < prof.size(); ++i)
      if (prof[i].second < prof[best].second) best = i;
    return prof[best].first;
  };

  {  // identity: minimum at p_c, outward plateau
    const auto prof = profile(WarpSpec::identity(), WarpSpec::identity(), -2.0, 8.0, 1001);
    double v0 = 0.0, v2 = 0.0, v6 = 0.0, vmin = prof.front().second;
    for (const auto& [t, v] : prof) {
      vmin = std::min(vmin, v);
      if (std::abs(t - 0.0) < 1e-9) v0 = v;
      if (std::abs(t - 2.0) < 1e-9) v2 = v;
      if (std::abs(t - 6.0) < 1e-9) v6 = v;
    }
    const bool plateau = std::abs(v2 - v6) < 1e-3;
    // The outbound ray ties with p_c to rounding noise; the inbound side
    // strictly decreases into it.
    const bool min_at_pc = v0 - vmin <= 1e-12 && prof.front().second - v0 > 1e-3;
    detail["identity"] = {{"min_gap_at_pc", v0 - vmin}, {"plateau_gap", std::abs(v2 - v6)}};
    ok = ok && plateau && min_at_pc;
  }
  {  // t^2: strictly decreasing outbound, no finite minimum
    const auto prof = profile(WarpSpec::power(2), WarpSpec::power(2), 0.0, 8.0, 1001);
    bool decreasing = true;
    for (std::size_t i = 1; i < prof.size(); ++i)
      decreasing = decreasing && prof[i].second < prof[i - 1].second;
    detail["square"] = {{"strictly_decreasing_outbound", decreasing}};
    ok = ok && decreasing;
  }
  {  // sqrt: minimum at p_c
    const auto prof = profile(WarpSpec::power(0.5), WarpSpec::power(0.5), -2.0, 8.0, 1001);
    const double step = prof[1].first - prof[0].first;
    const double amin = argmin_of(prof);
    detail["sqrt"] = {{"argmin", amin}};
    ok = ok && std::abs(amin - 0.0) <= step;
  }
  {  // pwl warp: minimum displaced outward to alpha
    const WarpSpec f1 = WarpSpec::piecewise_linear(3.0, 0.65, 1.5, default_delta(3.0, 0.65));
    const auto prof = profile(f1, WarpSpec::identity(), 0.0, 12.0, 2001);
    const double step = prof[1].first - prof[0].first;
    const double amin = argmin_of(prof);
    detail["warp"] = {{"argmin", amin}, {"alpha", 3.0}};
    ok = ok && std::abs(amin - 3.0) <= step;
  }
  {  // half warps: 0.5 t1 - t2 decreasing everywhere, 2 t1 - t2 anchored at p_c
    const auto prof_out = profile(WarpSpec::scale(0.5), WarpSpec::identity(), 0.0, 20.0, 2001);
    bool decreasing = true;
    for (std::size_t i = 1; i < prof_out.size(); ++i)
      decreasing = decreasing && prof_out[i].second < prof_out[i - 1].second;
    const auto prof_in = profile(WarpSpec::scale(2.0), WarpSpec::identity(), 0.0, 12.0, 2001);
    const double amin = argmin_of(prof_in);
    detail["half_warps"] = {{"outward_decreasing", decreasing}, {"inward_argmin", amin}};
    ok = ok && decreasing && amin == 0.0;
  }

  out["pass"] = ok;
  out["detail"] = detail;
  return out;
}

json run_verify_suite(std::uint64_t seed) {
  json props = json::array();
  props.push_back(line_extrema_property("on-line extrema for monotone warp: identity",
                                 [](double t) { return t; }, seed + 1, true));
  props.push_back(line_extrema_property("on-line extrema for monotone warp: t^2",
                                 [](double t) { return t * t; }, seed + 2, true));
  props.push_back(line_extrema_property("on-line extrema for monotone warp: sqrt",
                                 [](double t) { return std::sqrt(t); }, seed + 3, true));
  props.push_back(line_extrema_property("on-line extrema for monotone warp: t^1.5",
                                 [](double t) { return std::pow(t, 1.5); }, seed + 4, true));
  const WarpSpec pwl = WarpSpec::piecewise_linear(3.0, 0.65, 1.5, default_delta(3.0, 0.65));
  props.push_back(line_extrema_property("on-line extrema for monotone warp: pwl",
                                 [pwl](double t) { return pwl.value(t); }, seed + 5, true));
  props.push_back(line_extrema_property("off-line extremum for non-monotone witness (t-2)^2",
                                 [](double t) { return (t - 2.0) * (t - 2.0); }, seed + 6,
                                 false));
  props.push_back(reversal_property(seed));
  props.push_back(taxonomy_property());

  bool all = true;
  for (const auto& p : props) all = all && p.at("pass").get<bool>();
  json report;
  report["properties"] = props;
  report["pass"] = all;
  return report;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepBase {
  double alpha = 0.0, k1 = 0.0, k2 = 0.0, delta_k = 1.0;
  WarpSpec f2 = WarpSpec::identity();
};

json train_config_for_value(const json& base_cfg, const SweepBase& base,
                            const std::string& parameter, double value) {
  double alpha = base.alpha, k1 = base.k1, k2 = base.k2, delta_k = base.delta_k;
  if (parameter == "alpha")
    alpha = value;
  else if (parameter == "k1")
    k1 = value;
  else if (parameter == "k2")
    k2 = value;
  else if (parameter == "delta_k")
    delta_k = value;
  else
    throw ConfigError("config: unknown sweep parameter '" + parameter +
                      "' (expected alpha, k1, k2 or delta_k)");

  WarpSpec f1 = WarpSpec::identity();
  if (alpha == 0.0) {
    // alpha = 0 means inward force everywhere: slope k2 on all of [0, inf)
    // and a vanishing handicap correction.
    f1 = WarpSpec::scale(k2);
  } else {
    f1 = WarpSpec::piecewise_linear(alpha, k1, k2, default_delta(alpha, k1, delta_k));
  }

  json cfg = base_cfg;
  cfg["loss"]["warp"] = f1.str() + " - " + base.f2.str();
  // The swept warp applies to the whole run; phase alpha overrides would
  // silently fight the sweep.
  if (cfg.contains("train")) {
    for (const char* phase : {"phase1", "phase2"})
      if (cfg["train"].contains(phase) && cfg["train"][phase].contains("alpha"))
        cfg["train"][phase].erase("alpha");
  }
  return cfg;
}

}  // namespace

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + std::string(e.what()));
  }
}

int cmd_landscape(const json& config, const std::string& out_dir) {
  return map_exceptions([&]() {
    const auto p_c = require_as<Vec>(config, "p_c", "config");
    const auto p_cp = require_as<Vec>(config, "p_cprime", "config");
    const ProxyPair pair(p_c, p_cp);
    const LossConfig loss = parse_loss_config(config, "config");

    const json& g = require(config, "grid", "config");
    const auto xr = require_as<std::vector<double>>(g, "x_range", "grid");
    const auto yr = require_as<std::vector<double>>(g, "y_range", "grid");
    if (xr.size() != 2 || yr.size() != 2)
      throw ConfigError("config: grid ranges must be [lo, hi] pairs");
    GridSpec spec{xr[0], xr[1], yr[0], yr[1], require_as<int>(g, "resolution", "grid")};
    spec.validate();

    const LandscapeGrid grid = evaluate_grid(pair, loss, spec);

    ensure_dir(out_dir);
    export_grid(grid, out_dir + "/grid.csv");
    json extrema;
    const auto points_json = [](const std::vector<GridPoint>& pts) {
      json arr = json::array();
      for (const GridPoint& p : pts)
        arr.push_back({{"x", p.x}, {"y", p.y}, {"value", p.value}});
      return arr;
    };
    extrema["minima"] = points_json(grid.minima);
    extrema["maxima"] = points_json(grid.maxima);
    extrema["cell_diagonal"] = spec.cell_diagonal();
    const LineParam line = line_through(pair);
    json dists = json::array();
    for (const GridPoint& p : grid.minima)
      dists.push_back(point_line_distance(Vec{p.x, p.y}, line));
    extrema["minima_line_distance"] = dists;
    write_json(out_dir + "/extrema.json", extrema);
    return kOk;
  });
}

int cmd_verify(const std::string& out_dir, std::uint64_t seed) {
  return map_exceptions([&]() {
    const json report = run_verify_suite(seed);
    ensure_dir(out_dir);
    write_json(out_dir + "/verify_report.json", report);
    for (const auto& p : report.at("properties"))
      std::cout << (p.at("pass").get<bool>() ? "[pass] " : "[FAIL] ")
                << p.at("property").get<std::string>() << "\n";
    return report.at("pass").get<bool>() ? kOk : kPropertyFailure;
  });
}

int cmd_train(const json& config, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override) {
  return map_exceptions([&]() {
    const TrainSetup setup = parse_train_setup(config, seed_override);
    run_train_setup(setup, out_dir);
    return kOk;
  });
}

int cmd_sweep(const json& config, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override) {
  return map_exceptions([&]() {
    const std::string parameter = require_as<std::string>(config, "parameter", "config");
    const auto values = require_as<std::vector<double>>(config, "values", "config");
    const json& base_cfg = require(config, "train_config", "config");

    SweepBase base;
    const json& wb = require(config, "warp_base", "config");
    base.alpha = require_as<double>(wb, "alpha", "warp_base");
    base.k1 = require_as<double>(wb, "k1", "warp_base");
    base.k2 = require_as<double>(wb, "k2", "warp_base");
    base.delta_k = get_or<double>(wb, "delta_k", 1.0);
    if (wb.contains("f2")) {
      const std::string f2expr = wb.at("f2").get<std::string>() + " - t";
      base.f2 = parse_warp_pair(f2expr).f1;
    }

    // Validate every run's config before computing anything.
    std::vector<TrainSetup> setups;
    for (double v : values)
      setups.push_back(
          parse_train_setup(train_config_for_value(base_cfg, base, parameter, v), seed_override));

    ensure_dir(out_dir);
    std::string csv = parameter + ",r_at_1,nmi,map_at_r,rp,p_at_1,avg_dtp,diverged\n";
    char buf[256];
    for (std::size_t i = 0; i < setups.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s/run_%03zu", out_dir.c_str(), i);
      const json metrics = run_train_setup(setups[i], buf);
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n",
                    values[i], metrics.value("r_at_1", 0.0), metrics.value("nmi", 0.0),
                    metrics.value("map_at_r", 0.0), metrics.value("rp", 0.0),
                    metrics.value("p_at_1", 0.0), metrics.value("avg_dtp", 0.0),
                    metrics.value("diverged", false) ? 1 : 0);
      csv += buf;
    }
    write_text(out_dir + "/sweep.csv", csv);
    return kOk;
  });
}

int cmd_eval(const json& config, const std::string& out_dir) {
  return map_exceptions([&]() {
    const std::string ckpt_path = require_as<std::string>(config, "checkpoint", "config");
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    json dataset_cfg = require(config, "dataset", "config");
    if (dataset_cfg.is_object() && dataset_cfg.value("type", "") == "blobs" &&
        !dataset_cfg.contains("seed"))
      dataset_cfg["seed"] = ckpt.seed;
    const SplitData data = load_dataset(dataset_cfg);
    std::vector<int> ks = {1, 2, 4};
    if (config.contains("metrics"))
      ks = get_or<std::vector<int>>(config.at("metrics"), "recall_ks", ks);

    LabeledBatch train_batch;
    train_batch.embeddings = forward_points(ckpt.spec, ckpt.params, data.train.features);
    train_batch.labels = data.train.labels;
    const double train_dtp = avg_dtp(train_batch, ckpt.proxies).avg_dtp;

    const json metrics =
        evaluate_metrics(ckpt.spec, ckpt.params, data.test, ks, train_dtp, ckpt.seed);
    ensure_dir(out_dir);
    write_json(out_dir + "/metrics.json", metrics);
    return kOk;
  });
}

}  // namespace warploss
