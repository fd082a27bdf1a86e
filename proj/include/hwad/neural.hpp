#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hwad/rng.hpp"
#include "hwad/types.hpp"

namespace hwad::nn {

enum class CellKind { rnn, lstm, gru };

const char* cell_name(CellKind kind);
CellKind cell_from_name(const std::string& name);

struct EncoderConfig {
  CellKind cell = CellKind::gru;
  int hidden = 128;
  bool bidirectional = true;
  double dropout = 0.3;
  int embed_dim = 32;
  int n_tasks = kTaskCount;
  int feature_dim = kStrokeFeatureCount;
  bool layer_norm = true;

  int input_dim() const { return feature_dim + embed_dim; }
  int encoded_dim() const { return (bidirectional ? 2 : 1) * hidden; }
  int fused_dim() const { return encoded_dim() + 4; }
};

// Named slice of the flat parameter vector.
struct ParamView {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// All model parameters in one flat array plus a manifest of named shapes.
// Gradients use a plain vector with the identical layout.
struct ModelParams {
  EncoderConfig config;
  std::vector<ParamView> manifest;
  std::vector<double> flat;

  static ModelParams init(const EncoderConfig& cfg, Rng& rng);

  const ParamView& view(const std::string& name) const;
  double* data(const std::string& name);
  const double* data(const std::string& name) const;

  // Name of the manifest entry containing flat index i.
  const std::string& name_at(std::size_t i) const;
};

// Everything the backward pass needs to replay one window's forward pass.
struct ForwardTrace {
  int steps = 0;
  int task_index = 0;           // 0-based embedding row
  std::vector<double> inputs;   // [T x input_dim] embedded step inputs
  Statics statics{};

  struct Direction {
    std::vector<double> h;      // [(T+1) x H], row 0 = initial state
    std::vector<double> c;      // LSTM cell states, [(T+1) x H]
    std::vector<double> gates;  // cell-specific activations, see neural.cpp
    std::vector<double> ln_xhat;
    std::vector<double> ln_inv_std;
  } dir[2];

  std::vector<double> h_final;
  std::vector<double> dropout_mask;  // scaled inverted-dropout mask
  std::vector<double> fused;         // [h_final o mask; statics]
  double logit = 0.0;
  double prob = 0.5;
};

// --- building-block operations (also used standalone in tests) ------------

// Embeds the window's task id and appends it to every step's feature row.
// Throws on a task id outside [1, n_tasks].
std::vector<double> embed_and_concat(const WindowBatch& window, const ModelParams& params);

// Single cell steps for one direction (0 = forward, 1 = backward).
std::vector<double> rnn_step(const ModelParams& params, int direction,
                             const std::vector<double>& x,
                             const std::vector<double>& h_prev);
void lstm_step(const ModelParams& params, int direction, const std::vector<double>& x,
               const std::vector<double>& h_prev, const std::vector<double>& c_prev,
               std::vector<double>& h_out, std::vector<double>& c_out);
std::vector<double> gru_step(const ModelParams& params, int direction,
                             const std::vector<double>& x,
                             const std::vector<double>& h_prev);

// Runs the recurrence over the embedded inputs; returns [h_T; <-h_1] when
// bidirectional, h_T otherwise.
std::vector<double> encode_bidirectional(const std::vector<double>& inputs, int steps,
                                         const ModelParams& params);

// z = [h_final (dropout in train mode); statics] -> logistic(head(z)).
double fuse_and_classify(const std::vector<double>& h_final, const Statics& statics,
                         const ModelParams& params, bool train_mode, Rng* rng);

// --- full passes -----------------------------------------------------------

double forward(const WindowBatch& window, const ModelParams& params, bool train_mode,
               Rng* dropout_rng, ForwardTrace* trace);

// Exact reverse-mode gradients for every parameter, accumulated into `grads`
// (same layout as params.flat). d_loss_d_prob is the upstream derivative.
void backward(const ForwardTrace& trace, const ModelParams& params,
              double d_loss_d_prob, std::vector<double>& grads);

// --- checkpoints ------------------------------------------------------------

// Versioned binary blob: config, manifest of named shapes, flat parameters.
std::string checkpoint_serialize(const ModelParams& params);
ModelParams checkpoint_deserialize(const std::string& blob);

}  // namespace hwad::nn
