#include "warploss/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "warploss/metrics.hpp"
#include "warploss/rng.hpp"
#include "warploss/sampler.hpp"

namespace warploss {

namespace {

double train_set_avg_dtp(const EmbedderSpec& spec, const EmbedderParams& params,
                         const std::vector<Vec>& data, const std::vector<int>& labels,
                         const ProxySet& proxies) {
  LabeledBatch all;
  all.embeddings = forward_points(spec, params, data);
  all.labels = labels;
  return avg_dtp(all, proxies).avg_dtp;
}

}  // namespace

void TrainConfig::validate() const {
  if (phase1.steps < 0 || phase2.steps < 0)
    throw std::invalid_argument("TrainConfig: steps must be >= 0");
  if (!(lr_model > 0.0) || !(lr_proxies > 0.0))
    throw std::invalid_argument("TrainConfig: learning rates must be > 0");
  if (samples_per_class < 1)
    throw std::invalid_argument("TrainConfig: samples_per_class must be >= 1");
  if (batch_size < 1 || batch_size % samples_per_class != 0)
    throw std::invalid_argument("TrainConfig: batch_size must be divisible by samples_per_class");
  if (!(phase1.lr_multiplier > 0.0) || !(phase2.lr_multiplier > 0.0))
    throw std::invalid_argument("TrainConfig: lr multipliers must be > 0");
  if (!(phase1.loss.temperature > 0.0) || !(phase2.loss.temperature > 0.0))
    throw std::invalid_argument("TrainConfig: temperatures must be > 0");
}

ProxySet init_proxies(int num_classes, int dim, std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("init_proxies: need >= 2 classes");
  if (dim < 1) throw std::invalid_argument("init_proxies: dim must be >= 1");
  Rng rng(seed);
  ProxySet set;
  set.proxies.assign(num_classes, Vec(dim));
  for (Vec& p : set.proxies)
    for (double& v : p) v = rng.gaussian();
  return set;
}

TrainTrace train(const std::vector<Vec>& data, const std::vector<int>& labels,
                 const EmbedderSpec& spec, const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (data.size() != labels.size() || data.empty())
    throw std::invalid_argument("train: data/labels mismatch or empty");
  int num_classes = 0;
  for (int y : labels) num_classes = std::max(num_classes, y + 1);
  if (num_classes < 2) throw std::invalid_argument("train: need >= 2 classes");

  TrainTrace trace;
  trace.seed = cfg.seed;
  trace.phase1_steps = cfg.phase1.steps;
  trace.phase1_loss = cfg.phase1.loss;
  trace.phase2_loss = cfg.phase2.loss;

  trace.proxies = init_proxies(num_classes, spec.output_dim(),
                               derive_seed(cfg.seed, RngStream::kProxies));
  trace.params = init_embedder(spec, derive_seed(cfg.seed, RngStream::kModel));

  Adam adam_model({cfg.lr_model, cfg.beta1, cfg.beta2, cfg.adam_epsilon},
                  std::as_const(trace.params).tensors());
  std::vector<const std::vector<double>*> proxy_view;
  for (const Vec& p : trace.proxies.proxies) proxy_view.push_back(&p);
  Adam adam_proxies({cfg.lr_proxies, cfg.beta1, cfg.beta2, cfg.adam_epsilon}, proxy_view);

  BatchSampler sampler(labels, cfg.batch_size, cfg.samples_per_class,
                       derive_seed(cfg.seed, RngStream::kBatches));

  const int total_steps = cfg.phase1.steps + cfg.phase2.steps;
  const int steps_per_epoch =
      static_cast<int>((data.size() + cfg.batch_size - 1) / cfg.batch_size);

  const auto record_dtp = [&](int steps_done) -> double {
    const double dtp =
        train_set_avg_dtp(spec, trace.params, data, labels, trace.proxies);
    trace.epoch_dtp.emplace_back(steps_done, dtp);
    return dtp;
  };

  if (total_steps > 0) record_dtp(0);

  for (int step = 0; step < total_steps; ++step) {
    const bool phase2 = step >= cfg.phase1.steps;
    const PhaseConfig& phase = phase2 ? cfg.phase2 : cfg.phase1;

    const std::vector<int> idx = sampler.next();
    std::vector<Vec> inputs;
    inputs.reserve(idx.size());
    LabeledBatch batch;
    batch.labels.reserve(idx.size());
    for (int i : idx) {
      inputs.push_back(data[i]);
      batch.labels.push_back(labels[i]);
    }
    ForwardCache cache;
    batch.embeddings = forward_points(spec, trace.params, inputs, &cache);

    const LossGrad lg = batch_loss_grad(batch, trace.proxies, phase.loss);
    if (!std::isfinite(lg.loss)) {
      trace.diverged = true;
      trace.divergence_step = step;
      trace.divergence_reason = "non-finite loss at step " + std::to_string(step);
      break;
    }
    trace.step_losses.push_back(lg.loss);

    const EmbedderParams grads = backward(spec, trace.params, cache, lg.d_embeddings);

    std::vector<const std::vector<double>*> grad_view;
    for (const Vec& g : lg.d_proxies) grad_view.push_back(&g);
    std::vector<std::vector<double>*> proxy_params;
    for (Vec& p : trace.proxies.proxies) proxy_params.push_back(&p);

    // Check every gradient before either group updates, so an abort leaves
    // the state at a step boundary.
    bool finite = true;
    for (const auto* g : std::as_const(grads).tensors()) finite = finite && all_finite(*g);
    for (const auto* g : grad_view) finite = finite && all_finite(*g);
    if (!finite) {
      trace.diverged = true;
      trace.divergence_step = step;
      trace.divergence_reason = "non-finite gradient at step " + std::to_string(step);
      break;
    }
    adam_model.step(trace.params.tensors(), std::as_const(grads).tensors(), phase.lr_multiplier);
    adam_proxies.step(proxy_params, grad_view, phase.lr_multiplier);

    const bool epoch_end = (step + 1) % steps_per_epoch == 0 || step + 1 == total_steps;
    if (epoch_end) {
      const double dtp = record_dtp(step + 1);
      if (!std::isfinite(dtp) || dtp > cfg.divergence_dtp_threshold) {
        trace.diverged = true;
        trace.divergence_step = step;
        trace.divergence_reason =
            "avg dtp " + std::to_string(dtp) + " exceeded threshold at step " +
            std::to_string(step + 1);
        break;
      }
    }
  }

  trace.adam_model = {adam_model.moment1(), adam_model.moment2(), adam_model.step_count()};
  trace.adam_proxies = {adam_proxies.moment1(), adam_proxies.moment2(),
                        adam_proxies.step_count()};
  trace.batch_rng_state = sampler.rng_state();
  return trace;
}

namespace {

using nlohmann::json;

json dump_tensors(const std::vector<std::vector<double>>& ts) {
  json out = json::array();
  for (const auto& t : ts) out.push_back(t);
  return out;
}

std::vector<std::vector<double>> parse_tensors(const json& j) {
  std::vector<std::vector<double>> out;
  for (const auto& t : j) out.push_back(t.get<std::vector<double>>());
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  json j;
  j["version"] = ckpt.version;
  j["embedder"] = {{"widths", ckpt.spec.widths},
                   {"activation", activation_to_string(ckpt.spec.activation)},
                   {"layer_norm_output", ckpt.spec.layer_norm_output}};
  j["params"] = {{"weights", dump_tensors(ckpt.params.weights)},
                 {"biases", dump_tensors(ckpt.params.biases)},
                 {"ln_gain", ckpt.params.ln_gain},
                 {"ln_bias", ckpt.params.ln_bias}};
  j["proxies"] = dump_tensors(ckpt.proxies.proxies);
  j["adam_model"] = {{"step", ckpt.adam_model.step_count},
                     {"m", dump_tensors(ckpt.adam_model.m)},
                     {"v", dump_tensors(ckpt.adam_model.v)}};
  j["adam_proxies"] = {{"step", ckpt.adam_proxies.step_count},
                       {"m", dump_tensors(ckpt.adam_proxies.m)},
                       {"v", dump_tensors(ckpt.adam_proxies.v)}};
  j["batch_rng_state"] = ckpt.batch_rng_state;
  j["seed"] = ckpt.seed;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("load_checkpoint: " + std::string(e.what()));
  }
  Checkpoint ckpt;
  ckpt.version = j.at("version").get<int>();
  if (ckpt.version != 1)
    throw std::runtime_error("load_checkpoint: unsupported version " +
                             std::to_string(ckpt.version));
  const json& emb = j.at("embedder");
  ckpt.spec.widths = emb.at("widths").get<std::vector<int>>();
  ckpt.spec.activation = activation_from_string(emb.at("activation").get<std::string>());
  ckpt.spec.layer_norm_output = emb.at("layer_norm_output").get<bool>();
  const json& params = j.at("params");
  ckpt.params.weights = parse_tensors(params.at("weights"));
  ckpt.params.biases = parse_tensors(params.at("biases"));
  ckpt.params.ln_gain = params.at("ln_gain").get<std::vector<double>>();
  ckpt.params.ln_bias = params.at("ln_bias").get<std::vector<double>>();
  ckpt.proxies.proxies = parse_tensors(j.at("proxies"));
  ckpt.adam_model.step_count = j.at("adam_model").at("step").get<std::int64_t>();
  ckpt.adam_model.m = parse_tensors(j.at("adam_model").at("m"));
  ckpt.adam_model.v = parse_tensors(j.at("adam_model").at("v"));
  ckpt.adam_proxies.step_count = j.at("adam_proxies").at("step").get<std::int64_t>();
  ckpt.adam_proxies.m = parse_tensors(j.at("adam_proxies").at("m"));
  ckpt.adam_proxies.v = parse_tensors(j.at("adam_proxies").at("v"));
  const auto rng_state = j.at("batch_rng_state").get<std::vector<std::uint64_t>>();
  if (rng_state.size() != 4)
    throw std::runtime_error("load_checkpoint: batch_rng_state must have 4 words");
  std::copy(rng_state.begin(), rng_state.end(), ckpt.batch_rng_state.begin());
  ckpt.seed = j.at("seed").get<std::uint64_t>();
  return ckpt;
}

}  // namespace warploss
