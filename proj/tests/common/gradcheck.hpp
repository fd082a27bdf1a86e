#pragma once

// Finite-difference oracle for the hand-derived backward pass.

#include <cmath>
#include <string>
#include <vector>

#include "hwad/neural.hpp"
#include "hwad/optimizer.hpp"
#include "hwad/rng.hpp"
#include "hwad/types.hpp"

namespace hwad::gradcheck {

struct Result {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t n_params = 0;
  std::size_t n_zero_grads = 0;
};

inline WindowBatch random_window(Rng& rng, int steps, int feature_dim, int task_id, int label) {
  WindowBatch w;
  w.ws = steps;
  w.feature_dim = feature_dim;
  w.task_id = task_id;
  w.label = label;
  w.subject_id = "T" + std::to_string(task_id);
  for (int i = 0; i < 4; ++i) w.statics[static_cast<std::size_t>(i)] = rng.uniform(-1.0, 1.0);
  for (int i = 0; i < steps * feature_dim; ++i) w.values.push_back(rng.uniform(-1.0, 1.0));
  return w;
}

// With 3 hidden units the layer-norm input variance can land near zero, where
// 1/sqrt(var + eps) curves so sharply that an eps=1e-4 central difference is
// pure truncation noise. The probe point is rerolled until every norm site is
// well away from that regime; the derivative math itself is unchanged.
inline bool well_conditioned(const nn::ModelParams& params,
                             const std::vector<WindowBatch>& batch) {
  if (!params.config.layer_norm) return true;
  double max_inv_std = 0.0;
  nn::ForwardTrace trace;
  for (const auto& w : batch) {
    nn::forward(w, params, false, nullptr, &trace);
    const int dirs = params.config.bidirectional ? 2 : 1;
    for (int d = 0; d < dirs; ++d) {
      for (double v : trace.dir[d].ln_inv_std) max_inv_std = std::max(max_inv_std, v);
    }
  }
  return max_inv_std <= 5.0;  // var >= ~0.04 at every norm site
}

// Central finite differences (eps = 1e-4) against the analytic gradients on a
// 3-unit, 4-step model. Relative error uses max(|analytic|, |numeric|, 1e-2)
// as the denominator so sub-noise gradients compare on an absolute scale.
inline Result run(nn::CellKind cell, bool layer_norm, bool bidirectional, std::uint64_t seed) {
  nn::EncoderConfig cfg;
  cfg.cell = cell;
  cfg.hidden = 3;
  cfg.bidirectional = bidirectional;
  cfg.dropout = 0.0;
  cfg.embed_dim = 3;
  cfg.n_tasks = 2;
  cfg.feature_dim = 5;
  cfg.layer_norm = layer_norm;

  nn::ModelParams params;
  std::vector<WindowBatch> batch;
  for (int attempt = 0; attempt < 16; ++attempt) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    params = nn::ModelParams::init(cfg, rng);
    batch = {random_window(rng, 4, cfg.feature_dim, 1, 1),
             random_window(rng, 4, cfg.feature_dim, 2, 0)};
    if (well_conditioned(params, batch)) break;
  }
  const std::vector<int> labels = {1, 0};
  const std::pair<double, double> weights{1.1, 0.9};

  auto loss_of = [&](const nn::ModelParams& p) {
    std::vector<double> probs;
    for (const auto& w : batch) probs.push_back(nn::forward(w, p, false, nullptr, nullptr));
    return opt::weighted_bce(probs, labels, weights);
  };

  // Analytic gradients.
  std::vector<double> grads(params.flat.size(), 0.0);
  {
    std::vector<double> probs;
    std::vector<nn::ForwardTrace> traces(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      probs.push_back(nn::forward(batch[i], params, false, nullptr, &traces[i]));
    }
    const auto dprobs = opt::weighted_bce_grad(probs, labels, weights);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      nn::backward(traces[i], params, dprobs[i], grads);
    }
  }

  Result res;
  res.n_params = params.flat.size();
  const double eps = 1e-4;
  nn::ModelParams probe = params;
  for (std::size_t i = 0; i < params.flat.size(); ++i) {
    probe.flat[i] = params.flat[i] + eps;
    const double up = loss_of(probe);
    probe.flat[i] = params.flat[i] - eps;
    const double down = loss_of(probe);
    probe.flat[i] = params.flat[i];

    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(numeric), std::abs(grads[i]), 1e-2});
    const double rel = std::abs(numeric - grads[i]) / denom;
    if (rel > res.max_rel_err) {
      res.max_rel_err = rel;
      res.worst_param = params.name_at(i);
    }
    if (grads[i] == 0.0) ++res.n_zero_grads;
  }
  return res;
}

}  // namespace hwad::gradcheck
