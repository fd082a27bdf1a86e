#include "hwad/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "hwad/errors.hpp"

namespace hwad::opt {

namespace {
constexpr double kProbClamp = 1e-7;
}

std::pair<double, double> class_weights(const std::vector<int>& labels) {
  std::size_t n_ad = 0;
  for (int y : labels) {
    if (y == 1) ++n_ad;
  }
  const std::size_t n_hc = labels.size() - n_ad;
  if (n_ad == 0 || n_hc == 0) {
    throw DataError("class_weights: both classes must be present");
  }
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(n_hc)), n / (2.0 * static_cast<double>(n_ad))};
}

double weighted_bce(const std::vector<double>& probs, const std::vector<int>& labels,
                    const std::pair<double, double>& weights) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    const double w = labels[i] == 1 ? weights.second : weights.first;
    acc += labels[i] == 1 ? -w * std::log(p) : -w * std::log(1.0 - p);
  }
  return acc / static_cast<double>(probs.size());
}

std::vector<double> weighted_bce_grad(const std::vector<double>& probs,
                                      const std::vector<int>& labels,
                                      const std::pair<double, double>& weights) {
  const double inv_n = 1.0 / static_cast<double>(probs.size());
  std::vector<double> grad(probs.size(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (p <= kProbClamp || p >= 1.0 - kProbClamp) continue;  // clamped: flat
    const double w = labels[i] == 1 ? weights.second : weights.first;
    grad[i] = labels[i] == 1 ? -w / p * inv_n : w / (1.0 - p) * inv_n;
  }
  return grad;
}

void adamw_step(std::vector<double>& params, const std::vector<double>& grads,
                OptimState& state, const std::vector<nn::ParamView>* manifest) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw NumericError("adamw_step: size mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (std::isnan(grads[i])) {
      std::string name = "parameter " + std::to_string(i);
      if (manifest != nullptr) {
        for (const auto& v : *manifest) {
          if (i >= v.offset && i < v.offset + v.size()) {
            name = v.name;
            break;
          }
        }
      }
      throw NumericError("NaN gradient in " + name);
    }
  }

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= state.lr * (m_hat / (std::sqrt(v_hat) + state.eps) +
                             state.weight_decay * params[i]);
  }
}

double clip_gradients(std::vector<double>& grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

void PlateauScheduler::step(double val_f1, OptimState& state) {
  if (val_f1 > best_f1) {
    best_f1 = val_f1;
    since_improvement = 0;
    return;
  }
  ++since_improvement;
  if (since_improvement > patience) {
    state.lr = std::max(state.lr * factor, min_lr);
    since_improvement = 0;
  }
}

bool EarlyStopper::update(double val_f1) {
  if (val_f1 > best_f1) {
    best_f1 = val_f1;
    since_improvement = 0;
    return false;
  }
  ++since_improvement;
  return since_improvement >= patience;
}

}  // namespace hwad::opt
