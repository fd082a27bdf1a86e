#pragma once

#include <utility>
#include <vector>

#include "hwad/neural.hpp"

namespace hwad::opt {

// AdamW state. Learning rate operates in [1e-6, 1e-4]; decay is decoupled
// from the adaptive term.
struct OptimState {
  std::vector<double> m;  // first moments
  std::vector<double> v;  // second moments
  long step = 0;
  double lr = 1e-4;
  double weight_decay = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static OptimState init(std::size_t n_params) {
    OptimState s;
    s.m.assign(n_params, 0.0);
    s.v.assign(n_params, 0.0);
    return s;
  }
};

// Inverse-frequency class weights (w_HC, w_AD) with w_c = N / (2 * N_c).
// Throws when either class is absent.
std::pair<double, double> class_weights(const std::vector<int>& labels);

// Mean over the batch of -w_y [y log p + (1 - y) log(1 - p)], probabilities
// clamped to [1e-7, 1 - 1e-7].
double weighted_bce(const std::vector<double>& probs, const std::vector<int>& labels,
                    const std::pair<double, double>& weights);

// d(loss)/d(prob_i) for the clamped weighted BCE above (0 where clamped).
std::vector<double> weighted_bce_grad(const std::vector<double>& probs,
                                      const std::vector<int>& labels,
                                      const std::pair<double, double>& weights);

// One decoupled-weight-decay Adam update:
//   theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
// Throws NumericError naming the offending parameter on a NaN gradient; the
// manifest, when given, supplies the names.
void adamw_step(std::vector<double>& params, const std::vector<double>& grads,
                OptimState& state, const std::vector<nn::ParamView>* manifest = nullptr);

// Scales gradients so the global L2 norm is at most max_norm; returns the
// pre-clip norm.
double clip_gradients(std::vector<double>& grads, double max_norm = 1.0);

// Halves the learning rate (floored at 1e-6) once the monitored F1 fails to
// improve for more than `patience` updates.
struct PlateauScheduler {
  double best_f1 = -1.0;
  int since_improvement = 0;
  int patience = 5;
  double factor = 0.5;
  double min_lr = 1e-6;

  // Feeds one validation F1; adjusts state.lr in place.
  void step(double val_f1, OptimState& state);
};

// Stops after `patience` consecutive non-improving validations.
struct EarlyStopper {
  double best_f1 = -1.0;
  int since_improvement = 0;
  int patience = 10;  // half-epoch validations

  // Returns true when training should stop.
  bool update(double val_f1);
};

}  // namespace hwad::opt
