#include "hwad/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "hwad/errors.hpp"

namespace hwad::nn {

namespace {

constexpr double kLnEps = 1e-5;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y (+)= W x  with W row-major [rows x cols]
void matvec(const double* w, int rows, int cols, const double* x, double* y, bool accumulate) {
  for (int r = 0; r < rows; ++r) {
    const double* row = w + static_cast<std::size_t>(r) * cols;
    double acc = accumulate ? y[r] : 0.0;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// x += W^T y
void matvec_t_add(const double* w, int rows, int cols, const double* y, double* x) {
  for (int r = 0; r < rows; ++r) {
    const double* row = w + static_cast<std::size_t>(r) * cols;
    const double yr = y[r];
    for (int c = 0; c < cols; ++c) x[c] += row[c] * yr;
  }
}

// dW += y (outer) x
void outer_add(double* dw, int rows, int cols, const double* y, const double* x) {
  for (int r = 0; r < rows; ++r) {
    double* row = dw + static_cast<std::size_t>(r) * cols;
    const double yr = y[r];
    for (int c = 0; c < cols; ++c) row[c] += yr * x[c];
  }
}

void ln_forward(const double* z, int n, const double* gain, const double* bias,
                double* out, double* xhat, double* inv_std) {
  double mu = 0.0;
  for (int i = 0; i < n; ++i) mu += z[i];
  mu /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i) var += (z[i] - mu) * (z[i] - mu);
  var /= n;
  const double is = 1.0 / std::sqrt(var + kLnEps);
  for (int i = 0; i < n; ++i) {
    xhat[i] = (z[i] - mu) * is;
    out[i] = gain[i] * xhat[i] + bias[i];
  }
  *inv_std = is;
}

// Gradients through layer norm; accumulates dgain/dbias.
void ln_backward(const double* dout, int n, const double* gain, const double* xhat,
                 double inv_std, double* dgain, double* dbias, double* dz) {
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    dgain[i] += dout[i] * xhat[i];
    dbias[i] += dout[i];
    const double dxh = dout[i] * gain[i];
    m1 += dxh;
    m2 += dxh * xhat[i];
  }
  m1 /= n;
  m2 /= n;
  for (int i = 0; i < n; ++i) {
    const double dxh = dout[i] * gain[i];
    dz[i] = inv_std * (dxh - m1 - xhat[i] * m2);
  }
}

const char* dir_prefix(int direction) { return direction == 0 ? "fwd" : "bwd"; }

}  // namespace

const char* cell_name(CellKind kind) {
  switch (kind) {
    case CellKind::rnn: return "rnn";
    case CellKind::lstm: return "lstm";
    case CellKind::gru: return "gru";
  }
  return "?";
}

CellKind cell_from_name(const std::string& name) {
  if (name == "rnn") return CellKind::rnn;
  if (name == "lstm") return CellKind::lstm;
  if (name == "gru") return CellKind::gru;
  throw ConfigError("unknown cell '" + name + "' (expected rnn, lstm or gru)");
}

// ---------------------------------------------------------------------------
// Parameter layout
// ---------------------------------------------------------------------------

namespace {

void register_view(std::vector<ParamView>& manifest, std::size_t& total,
                   const std::string& name, int rows, int cols) {
  manifest.push_back(ParamView{name, total, rows, cols});
  total += static_cast<std::size_t>(rows) * cols;
}

void register_ln(std::vector<ParamView>& manifest, std::size_t& total,
                 const std::string& prefix, int hidden) {
  register_view(manifest, total, prefix + ".gain", 1, hidden);
  register_view(manifest, total, prefix + ".bias", 1, hidden);
}

}  // namespace

ModelParams ModelParams::init(const EncoderConfig& cfg, Rng& rng) {
  if (cfg.hidden < 1) throw ConfigError("hidden must be >= 1");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");

  ModelParams p;
  p.config = cfg;
  std::size_t total = 0;
  auto& m = p.manifest;

  const int H = cfg.hidden;
  const int I = cfg.input_dim();
  register_view(m, total, "embed", cfg.n_tasks, cfg.embed_dim);
  const int n_dirs = cfg.bidirectional ? 2 : 1;
  for (int d = 0; d < n_dirs; ++d) {
    const std::string pre = dir_prefix(d);
    switch (cfg.cell) {
      case CellKind::rnn:
        register_view(m, total, pre + ".w_ih", H, I);
        register_view(m, total, pre + ".w_hh", H, H);
        register_view(m, total, pre + ".b", 1, H);
        if (cfg.layer_norm) register_ln(m, total, pre + ".ln", H);
        break;
      case CellKind::lstm:
        for (const char* g : {"f", "i", "c", "o"}) {
          register_view(m, total, pre + ".w_" + std::string(g), H, H + I);
        }
        for (const char* g : {"f", "i", "c", "o"}) {
          register_view(m, total, pre + ".b_" + std::string(g), 1, H);
        }
        if (cfg.layer_norm) {
          for (const char* g : {"f", "i", "c", "o"}) {
            register_ln(m, total, pre + ".ln_" + std::string(g), H);
          }
        }
        break;
      case CellKind::gru:
        for (const char* g : {"r", "z", "c"}) {
          register_view(m, total, pre + ".w_" + std::string(g), H, H + I);
        }
        if (cfg.layer_norm) {
          for (const char* g : {"r", "z", "c"}) {
            register_ln(m, total, pre + ".ln_" + std::string(g), H);
          }
        }
        break;
    }
  }
  register_view(m, total, "head.w", 1, cfg.fused_dim());
  register_view(m, total, "head.b", 1, 1);

  p.flat.assign(total, 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(H));
  for (const auto& view : p.manifest) {
    double* dst = p.flat.data() + view.offset;
    const bool is_weight = view.name.find(".w") != std::string::npos ||
                           view.name == "embed" || view.name == "head.w";
    const bool is_ln_gain = view.name.size() > 5 &&
                            view.name.rfind(".gain") == view.name.size() - 5;
    const bool is_forget_bias = view.name.rfind(".b_f") != std::string::npos;
    if (is_weight) {
      for (std::size_t i = 0; i < view.size(); ++i) dst[i] = rng.uniform(-scale, scale);
    } else if (is_ln_gain) {
      std::fill(dst, dst + view.size(), 1.0);
    } else if (is_forget_bias) {
      std::fill(dst, dst + view.size(), 1.0);
    }  // remaining biases stay zero
  }
  return p;
}

const ParamView& ModelParams::view(const std::string& name) const {
  for (const auto& v : manifest) {
    if (v.name == name) return v;
  }
  throw NumericError("no parameter named '" + name + "'");
}

double* ModelParams::data(const std::string& name) { return flat.data() + view(name).offset; }

const double* ModelParams::data(const std::string& name) const {
  return flat.data() + view(name).offset;
}

const std::string& ModelParams::name_at(std::size_t i) const {
  for (const auto& v : manifest) {
    if (i >= v.offset && i < v.offset + v.size()) return v.name;
  }
  throw NumericError("flat index out of range");
}

// ---------------------------------------------------------------------------
// Forward building blocks
// ---------------------------------------------------------------------------

std::vector<double> embed_and_concat(const WindowBatch& window, const ModelParams& params) {
  const EncoderConfig& cfg = params.config;
  if (window.task_id < 1 || window.task_id > cfg.n_tasks) {
    throw DataError("task id " + std::to_string(window.task_id) + " outside [1, " +
                    std::to_string(cfg.n_tasks) + "]");
  }
  if (window.feature_dim != cfg.feature_dim) {
    throw DataError("window feature dim " + std::to_string(window.feature_dim) +
                    " != configured " + std::to_string(cfg.feature_dim));
  }
  const int T = window.ws;
  const int F = cfg.feature_dim;
  const int E = cfg.embed_dim;
  const double* embed_row =
      params.data("embed") + static_cast<std::size_t>(window.task_id - 1) * E;

  std::vector<double> out(static_cast<std::size_t>(T) * (F + E));
  for (int t = 0; t < T; ++t) {
    double* row = out.data() + static_cast<std::size_t>(t) * (F + E);
    for (int f = 0; f < F; ++f) row[f] = window.at(t, f);
    for (int e = 0; e < E; ++e) row[F + e] = embed_row[e];
  }
  return out;
}

namespace {

// Resolved per-direction weight pointers.
struct RnnRefs {
  const double *w_ih, *w_hh, *b, *ln_g, *ln_b;
};
struct GateRefs {
  const double* w = nullptr;
  const double* b = nullptr;
  const double* ln_g = nullptr;
  const double* ln_b = nullptr;
};

RnnRefs rnn_refs(const ModelParams& p, int d) {
  const std::string pre = dir_prefix(d);
  RnnRefs r{p.data(pre + ".w_ih"), p.data(pre + ".w_hh"), p.data(pre + ".b"), nullptr, nullptr};
  if (p.config.layer_norm) {
    r.ln_g = p.data(pre + ".ln.gain");
    r.ln_b = p.data(pre + ".ln.bias");
  }
  return r;
}

GateRefs gate_refs(const ModelParams& p, int d, const char* g, bool biased) {
  const std::string pre = dir_prefix(d);
  GateRefs r;
  r.w = p.data(pre + ".w_" + g);
  if (biased) r.b = p.data(pre + ".b_" + g);
  if (p.config.layer_norm) {
    r.ln_g = p.data(pre + ".ln_" + g + ".gain");
    r.ln_b = p.data(pre + ".ln_" + g + ".bias");
  }
  return r;
}

// Trace geometry helpers. Gate rows hold, per step:
//   lstm: [f i cand o tanhC] (5H), ln caches 4H per step
//   gru:  [r z cand rh] (4H),      ln caches 3H per step
int gates_per_step(CellKind cell, int H) {
  switch (cell) {
    case CellKind::rnn: return 0;
    case CellKind::lstm: return 5 * H;
    case CellKind::gru: return 4 * H;
  }
  return 0;
}

int ln_blocks(CellKind cell) {
  switch (cell) {
    case CellKind::rnn: return 1;
    case CellKind::lstm: return 4;
    case CellKind::gru: return 3;
  }
  return 0;
}

void resize_direction(ForwardTrace::Direction& dir, const EncoderConfig& cfg, int T) {
  const int H = cfg.hidden;
  dir.h.assign(static_cast<std::size_t>(T + 1) * H, 0.0);
  if (cfg.cell == CellKind::lstm) {
    dir.c.assign(static_cast<std::size_t>(T + 1) * H, 0.0);
  }
  dir.gates.assign(static_cast<std::size_t>(T) * gates_per_step(cfg.cell, H), 0.0);
  if (cfg.layer_norm) {
    dir.ln_xhat.assign(static_cast<std::size_t>(T) * ln_blocks(cfg.cell) * H, 0.0);
    dir.ln_inv_std.assign(static_cast<std::size_t>(T) * ln_blocks(cfg.cell), 0.0);
  }
}

// Applies layer norm when configured, otherwise copies pre -> act.
void maybe_ln(const EncoderConfig& cfg, const double* pre, const double* g, const double* b,
              double* act, double* xhat, double* inv_std) {
  if (cfg.layer_norm) {
    ln_forward(pre, cfg.hidden, g, b, act, xhat, inv_std);
  } else {
    std::copy(pre, pre + cfg.hidden, act);
  }
}

void step_rnn(const EncoderConfig& cfg, const RnnRefs& w, const double* x,
              const double* h_prev, double* h_out, double* xhat, double* inv_std,
              std::vector<double>& scratch) {
  const int H = cfg.hidden;
  scratch.resize(static_cast<std::size_t>(2) * H);
  double* pre = scratch.data();
  double* act = scratch.data() + H;
  matvec(w.w_ih, H, cfg.input_dim(), x, pre, false);
  matvec(w.w_hh, H, H, h_prev, pre, true);
  for (int i = 0; i < H; ++i) pre[i] += w.b[i];
  maybe_ln(cfg, pre, w.ln_g, w.ln_b, act, xhat, inv_std);
  for (int i = 0; i < H; ++i) h_out[i] = std::tanh(act[i]);
}

void step_lstm(const EncoderConfig& cfg, const GateRefs gates[4], const double* x,
               const double* h_prev, const double* c_prev, double* h_out, double* c_out,
               double* gate_row, double* xhat, double* inv_std, std::vector<double>& scratch) {
  const int H = cfg.hidden;
  const int I = cfg.input_dim();
  scratch.resize(static_cast<std::size_t>(H + I) + 2 * H);
  double* u = scratch.data();  // [h_prev; x]
  double* pre = u + H + I;
  double* act = pre + H;
  std::copy(h_prev, h_prev + H, u);
  std::copy(x, x + I, u + H);

  double* f = gate_row;
  double* in = gate_row + H;
  double* cand = gate_row + 2 * H;
  double* o = gate_row + 3 * H;
  double* tc = gate_row + 4 * H;

  for (int g = 0; g < 4; ++g) {
    matvec(gates[g].w, H, H + I, u, pre, false);
    for (int i = 0; i < H; ++i) pre[i] += gates[g].b[i];
    maybe_ln(cfg, pre, gates[g].ln_g, gates[g].ln_b, act,
             xhat + static_cast<std::size_t>(g) * H, inv_std + g);
    double* dst = (g == 0) ? f : (g == 1) ? in : (g == 2) ? cand : o;
    if (g == 2) {
      for (int i = 0; i < H; ++i) dst[i] = std::tanh(act[i]);
    } else {
      for (int i = 0; i < H; ++i) dst[i] = sigmoid(act[i]);
    }
  }
  for (int i = 0; i < H; ++i) {
    c_out[i] = f[i] * c_prev[i] + in[i] * cand[i];
    tc[i] = std::tanh(c_out[i]);
    h_out[i] = o[i] * tc[i];
  }
}

void step_gru(const EncoderConfig& cfg, const GateRefs gates[3], const double* x,
              const double* h_prev, double* h_out, double* gate_row, double* xhat,
              double* inv_std, std::vector<double>& scratch) {
  const int H = cfg.hidden;
  const int I = cfg.input_dim();
  scratch.resize(2 * static_cast<std::size_t>(H + I) + 2 * H);
  double* u = scratch.data();            // [h_prev; x]
  double* u2 = u + H + I;                // [r o h_prev; x]
  double* pre = u2 + H + I;
  double* act = pre + H;
  std::copy(h_prev, h_prev + H, u);
  std::copy(x, x + I, u + H);

  double* r = gate_row;
  double* z = gate_row + H;
  double* cand = gate_row + 2 * H;
  double* rh = gate_row + 3 * H;

  matvec(gates[0].w, H, H + I, u, pre, false);
  maybe_ln(cfg, pre, gates[0].ln_g, gates[0].ln_b, act, xhat, inv_std);
  for (int i = 0; i < H; ++i) r[i] = sigmoid(act[i]);

  matvec(gates[1].w, H, H + I, u, pre, false);
  maybe_ln(cfg, pre, gates[1].ln_g, gates[1].ln_b, act, xhat + H, inv_std + 1);
  for (int i = 0; i < H; ++i) z[i] = sigmoid(act[i]);

  for (int i = 0; i < H; ++i) rh[i] = r[i] * h_prev[i];
  std::copy(rh, rh + H, u2);
  std::copy(x, x + I, u2 + H);
  matvec(gates[2].w, H, H + I, u2, pre, false);
  maybe_ln(cfg, pre, gates[2].ln_g, gates[2].ln_b, act, xhat + 2 * H, inv_std + 2);
  for (int i = 0; i < H; ++i) cand[i] = std::tanh(act[i]);

  // h = (1 - z) o h_prev + z o cand
  for (int i = 0; i < H; ++i) h_out[i] = (1.0 - z[i]) * h_prev[i] + z[i] * cand[i];
}

// Runs one direction over the embedded inputs, filling the direction trace.
void run_direction(const ModelParams& params, const std::vector<double>& inputs, int T,
                   int direction, ForwardTrace::Direction& dir, std::vector<double>& scratch) {
  const EncoderConfig& cfg = params.config;
  const int H = cfg.hidden;
  const int I = cfg.input_dim();
  resize_direction(dir, cfg, T);

  const int blocks = ln_blocks(cfg.cell);
  RnnRefs rnn{};
  GateRefs lstm_gates[4];
  GateRefs gru_gates[3];
  switch (cfg.cell) {
    case CellKind::rnn:
      rnn = rnn_refs(params, direction);
      break;
    case CellKind::lstm:
      lstm_gates[0] = gate_refs(params, direction, "f", true);
      lstm_gates[1] = gate_refs(params, direction, "i", true);
      lstm_gates[2] = gate_refs(params, direction, "c", true);
      lstm_gates[3] = gate_refs(params, direction, "o", true);
      break;
    case CellKind::gru:
      gru_gates[0] = gate_refs(params, direction, "r", false);
      gru_gates[1] = gate_refs(params, direction, "z", false);
      gru_gates[2] = gate_refs(params, direction, "c", false);
      break;
  }

  for (int s = 0; s < T; ++s) {
    const int t = direction == 0 ? s : T - 1 - s;
    const double* x = inputs.data() + static_cast<std::size_t>(t) * I;
    const double* h_prev = dir.h.data() + static_cast<std::size_t>(s) * H;
    double* h_out = dir.h.data() + static_cast<std::size_t>(s + 1) * H;
    double* xhat = cfg.layer_norm
                       ? dir.ln_xhat.data() + static_cast<std::size_t>(s) * blocks * H
                       : nullptr;
    double* inv_std = cfg.layer_norm
                          ? dir.ln_inv_std.data() + static_cast<std::size_t>(s) * blocks
                          : nullptr;
    switch (cfg.cell) {
      case CellKind::rnn:
        step_rnn(cfg, rnn, x, h_prev, h_out, xhat, inv_std, scratch);
        break;
      case CellKind::lstm: {
        const double* c_prev = dir.c.data() + static_cast<std::size_t>(s) * H;
        double* c_out = dir.c.data() + static_cast<std::size_t>(s + 1) * H;
        double* gate_row = dir.gates.data() + static_cast<std::size_t>(s) * 5 * H;
        step_lstm(cfg, lstm_gates, x, h_prev, c_prev, h_out, c_out, gate_row, xhat, inv_std,
                  scratch);
        break;
      }
      case CellKind::gru: {
        double* gate_row = dir.gates.data() + static_cast<std::size_t>(s) * 4 * H;
        step_gru(cfg, gru_gates, x, h_prev, h_out, gate_row, xhat, inv_std, scratch);
        break;
      }
    }
  }
}

}  // namespace

std::vector<double> rnn_step(const ModelParams& params, int direction,
                             const std::vector<double>& x, const std::vector<double>& h_prev) {
  const EncoderConfig& cfg = params.config;
  std::vector<double> h(cfg.hidden), xhat(cfg.hidden), scratch;
  double inv_std = 0.0;
  step_rnn(cfg, rnn_refs(params, direction), x.data(), h_prev.data(), h.data(), xhat.data(),
           &inv_std, scratch);
  return h;
}

void lstm_step(const ModelParams& params, int direction, const std::vector<double>& x,
               const std::vector<double>& h_prev, const std::vector<double>& c_prev,
               std::vector<double>& h_out, std::vector<double>& c_out) {
  const EncoderConfig& cfg = params.config;
  const int H = cfg.hidden;
  GateRefs gates[4] = {gate_refs(params, direction, "f", true),
                       gate_refs(params, direction, "i", true),
                       gate_refs(params, direction, "c", true),
                       gate_refs(params, direction, "o", true)};
  h_out.assign(H, 0.0);
  c_out.assign(H, 0.0);
  std::vector<double> gate_row(static_cast<std::size_t>(5) * H);
  std::vector<double> xhat(static_cast<std::size_t>(4) * H);
  double inv_std[4] = {};
  std::vector<double> scratch;
  step_lstm(cfg, gates, x.data(), h_prev.data(), c_prev.data(), h_out.data(), c_out.data(),
            gate_row.data(), xhat.data(), inv_std, scratch);
}

std::vector<double> gru_step(const ModelParams& params, int direction,
                             const std::vector<double>& x, const std::vector<double>& h_prev) {
  const EncoderConfig& cfg = params.config;
  const int H = cfg.hidden;
  GateRefs gates[3] = {gate_refs(params, direction, "r", false),
                       gate_refs(params, direction, "z", false),
                       gate_refs(params, direction, "c", false)};
  std::vector<double> h(H);
  std::vector<double> gate_row(static_cast<std::size_t>(4) * H);
  std::vector<double> xhat(static_cast<std::size_t>(3) * H);
  double inv_std[3] = {};
  std::vector<double> scratch;
  step_gru(cfg, gates, x.data(), h_prev.data(), h.data(), gate_row.data(), xhat.data(), inv_std,
           scratch);
  return h;
}

std::vector<double> encode_bidirectional(const std::vector<double>& inputs, int steps,
                                         const ModelParams& params) {
  const EncoderConfig& cfg = params.config;
  const int H = cfg.hidden;
  ForwardTrace::Direction dirs[2];
  std::vector<double> scratch;
  const int n_dirs = cfg.bidirectional ? 2 : 1;
  std::vector<double> h_final(static_cast<std::size_t>(n_dirs) * H);
  for (int d = 0; d < n_dirs; ++d) {
    run_direction(params, inputs, steps, d, dirs[d], scratch);
    std::copy(dirs[d].h.end() - H, dirs[d].h.end(),
              h_final.begin() + static_cast<std::ptrdiff_t>(d) * H);
  }
  return h_final;
}

double fuse_and_classify(const std::vector<double>& h_final, const Statics& statics,
                         const ModelParams& params, bool train_mode, Rng* rng) {
  const EncoderConfig& cfg = params.config;
  const int D = cfg.encoded_dim();
  std::vector<double> fused(static_cast<std::size_t>(cfg.fused_dim()));
  for (int i = 0; i < D; ++i) {
    double m = 1.0;
    if (train_mode && cfg.dropout > 0.0) {
      if (rng == nullptr) throw NumericError("dropout in train mode needs an rng");
      m = (rng->uniform() < cfg.dropout) ? 0.0 : 1.0 / (1.0 - cfg.dropout);
    }
    fused[static_cast<std::size_t>(i)] = h_final[static_cast<std::size_t>(i)] * m;
  }
  for (int i = 0; i < 4; ++i) fused[static_cast<std::size_t>(D + i)] = statics[static_cast<std::size_t>(i)];
  const double* hw = params.data("head.w");
  double logit = params.data("head.b")[0];
  for (int i = 0; i < cfg.fused_dim(); ++i) logit += hw[i] * fused[static_cast<std::size_t>(i)];
  return sigmoid(logit);
}

double forward(const WindowBatch& window, const ModelParams& params, bool train_mode,
               Rng* dropout_rng, ForwardTrace* trace) {
  const EncoderConfig& cfg = params.config;
  ForwardTrace local;
  ForwardTrace& tr = trace != nullptr ? *trace : local;

  const int T = window.ws;
  tr.steps = T;
  tr.task_index = window.task_id - 1;
  tr.statics = window.statics;
  tr.inputs = embed_and_concat(window, params);

  const int H = cfg.hidden;
  const int n_dirs = cfg.bidirectional ? 2 : 1;
  const int D = cfg.encoded_dim();
  std::vector<double> scratch;
  tr.h_final.assign(static_cast<std::size_t>(D), 0.0);
  for (int d = 0; d < n_dirs; ++d) {
    run_direction(params, tr.inputs, T, d, tr.dir[d], scratch);
    std::copy(tr.dir[d].h.end() - H, tr.dir[d].h.end(),
              tr.h_final.begin() + static_cast<std::ptrdiff_t>(d) * H);
  }

  tr.dropout_mask.assign(static_cast<std::size_t>(D), 1.0);
  if (train_mode && cfg.dropout > 0.0) {
    if (dropout_rng == nullptr) throw NumericError("dropout in train mode needs an rng");
    const double keep = 1.0 - cfg.dropout;
    for (int i = 0; i < D; ++i) {
      tr.dropout_mask[static_cast<std::size_t>(i)] =
          (dropout_rng->uniform() < cfg.dropout) ? 0.0 : 1.0 / keep;
    }
  }

  tr.fused.assign(static_cast<std::size_t>(cfg.fused_dim()), 0.0);
  for (int i = 0; i < D; ++i) {
    tr.fused[static_cast<std::size_t>(i)] =
        tr.h_final[static_cast<std::size_t>(i)] * tr.dropout_mask[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < 4; ++i) {
    tr.fused[static_cast<std::size_t>(D + i)] = tr.statics[static_cast<std::size_t>(i)];
  }

  const double* hw = params.data("head.w");
  double logit = params.data("head.b")[0];
  for (int i = 0; i < cfg.fused_dim(); ++i) {
    logit += hw[i] * tr.fused[static_cast<std::size_t>(i)];
  }
  tr.logit = logit;
  tr.prob = sigmoid(logit);
  return tr.prob;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

namespace {

struct GradRefs {
  double* at(const ModelParams& p, std::vector<double>& grads, const std::string& name) const {
    return grads.data() + p.view(name).offset;
  }
};

void backward_direction(const ModelParams& params, const ForwardTrace& tr, int direction,
                        const double* dh_terminal, std::vector<double>& grads,
                        std::vector<double>& dinputs) {
  const EncoderConfig& cfg = params.config;
  const int H = cfg.hidden;
  const int I = cfg.input_dim();
  const int T = tr.steps;
  const auto& dir = tr.dir[direction];
  const std::string pre = dir_prefix(direction);
  const int blocks = ln_blocks(cfg.cell);

  std::vector<double> dh(dh_terminal, dh_terminal + H);
  std::vector<double> dh_prev(static_cast<std::size_t>(H), 0.0);
  std::vector<double> dc(static_cast<std::size_t>(H), 0.0);  // LSTM carry
  std::vector<double> da(static_cast<std::size_t>(H), 0.0);
  std::vector<double> dpre(static_cast<std::size_t>(H), 0.0);
  std::vector<double> du(static_cast<std::size_t>(H + I), 0.0);
  std::vector<double> u(static_cast<std::size_t>(H + I), 0.0);

  // Resolved gradient pointers.
  auto g = [&](const std::string& name) { return grads.data() + params.view(name).offset; };
  auto w = [&](const std::string& name) { return params.data(name); };

  for (int s = T - 1; s >= 0; --s) {
    const int t = direction == 0 ? s : T - 1 - s;
    const double* x = tr.inputs.data() + static_cast<std::size_t>(t) * I;
    double* dx = dinputs.data() + static_cast<std::size_t>(t) * I;
    const double* h_prev = dir.h.data() + static_cast<std::size_t>(s) * H;
    const double* h_cur = dir.h.data() + static_cast<std::size_t>(s + 1) * H;
    const double* xhat_row = cfg.layer_norm
                                 ? dir.ln_xhat.data() + static_cast<std::size_t>(s) * blocks * H
                                 : nullptr;
    const double* inv_std_row =
        cfg.layer_norm ? dir.ln_inv_std.data() + static_cast<std::size_t>(s) * blocks : nullptr;

    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);

    auto ln_or_copy = [&](int block, const std::string& ln_name, const double* dact,
                          double* out_dpre) {
      if (cfg.layer_norm) {
        ln_backward(dact, H, w(ln_name + ".gain"), xhat_row + static_cast<std::size_t>(block) * H,
                    inv_std_row[block], g(ln_name + ".gain"), g(ln_name + ".bias"), out_dpre);
      } else {
        std::copy(dact, dact + H, out_dpre);
      }
    };

    switch (cfg.cell) {
      case CellKind::rnn: {
        for (int i = 0; i < H; ++i) da[static_cast<std::size_t>(i)] = dh[static_cast<std::size_t>(i)] * (1.0 - h_cur[i] * h_cur[i]);
        ln_or_copy(0, pre + ".ln", da.data(), dpre.data());
        for (int i = 0; i < H; ++i) g(pre + ".b")[i] += dpre[static_cast<std::size_t>(i)];
        outer_add(g(pre + ".w_ih"), H, I, dpre.data(), x);
        outer_add(g(pre + ".w_hh"), H, H, dpre.data(), h_prev);
        matvec_t_add(w(pre + ".w_ih"), H, I, dpre.data(), dx);
        matvec_t_add(w(pre + ".w_hh"), H, H, dpre.data(), dh_prev.data());
        break;
      }
      case CellKind::lstm: {
        const double* gate_row = dir.gates.data() + static_cast<std::size_t>(s) * 5 * H;
        const double* f = gate_row;
        const double* in = gate_row + H;
        const double* cand = gate_row + 2 * H;
        const double* o = gate_row + 3 * H;
        const double* tc = gate_row + 4 * H;
        const double* c_prev = dir.c.data() + static_cast<std::size_t>(s) * H;

        std::copy(h_prev, h_prev + H, u.begin());
        std::copy(x, x + I, u.begin() + H);

        // dc accumulates the carry plus the path through h = o o tanh(C).
        for (int i = 0; i < H; ++i) {
          dc[static_cast<std::size_t>(i)] += dh[static_cast<std::size_t>(i)] * o[i] * (1.0 - tc[i] * tc[i]);
        }

        const char* names[4] = {"f", "i", "c", "o"};
        for (int gate = 0; gate < 4; ++gate) {
          for (int i = 0; i < H; ++i) {
            double dg;
            switch (gate) {
              case 0: dg = dc[static_cast<std::size_t>(i)] * c_prev[i]; dg *= f[i] * (1.0 - f[i]); break;
              case 1: dg = dc[static_cast<std::size_t>(i)] * cand[i]; dg *= in[i] * (1.0 - in[i]); break;
              case 2: dg = dc[static_cast<std::size_t>(i)] * in[i]; dg *= 1.0 - cand[i] * cand[i]; break;
              default: dg = dh[static_cast<std::size_t>(i)] * tc[i]; dg *= o[i] * (1.0 - o[i]); break;
            }
            da[static_cast<std::size_t>(i)] = dg;
          }
          const std::string gn = names[gate];
          ln_or_copy(gate, pre + ".ln_" + gn, da.data(), dpre.data());
          for (int i = 0; i < H; ++i) g(pre + ".b_" + gn)[i] += dpre[static_cast<std::size_t>(i)];
          outer_add(g(pre + ".w_" + gn), H, H + I, dpre.data(), u.data());
          std::fill(du.begin(), du.end(), 0.0);
          matvec_t_add(w(pre + ".w_" + gn), H, H + I, dpre.data(), du.data());
          for (int i = 0; i < H; ++i) dh_prev[static_cast<std::size_t>(i)] += du[static_cast<std::size_t>(i)];
          for (int i = 0; i < I; ++i) dx[i] += du[static_cast<std::size_t>(H + i)];
        }
        // Carry into step s-1.
        for (int i = 0; i < H; ++i) dc[static_cast<std::size_t>(i)] *= f[i];
        break;
      }
      case CellKind::gru: {
        const double* gate_row = dir.gates.data() + static_cast<std::size_t>(s) * 4 * H;
        const double* r = gate_row;
        const double* z = gate_row + H;
        const double* cand = gate_row + 2 * H;
        const double* rh = gate_row + 3 * H;

        std::copy(h_prev, h_prev + H, u.begin());
        std::copy(x, x + I, u.begin() + H);

        // h = (1 - z) o h_prev + z o cand
        std::vector<double> dz(static_cast<std::size_t>(H)), dcand(static_cast<std::size_t>(H)), dr(static_cast<std::size_t>(H));
        for (int i = 0; i < H; ++i) {
          dz[static_cast<std::size_t>(i)] = dh[static_cast<std::size_t>(i)] * (cand[i] - h_prev[i]);
          dcand[static_cast<std::size_t>(i)] = dh[static_cast<std::size_t>(i)] * z[i];
          dh_prev[static_cast<std::size_t>(i)] += dh[static_cast<std::size_t>(i)] * (1.0 - z[i]);
        }

        // candidate path
        for (int i = 0; i < H; ++i) da[static_cast<std::size_t>(i)] = dcand[static_cast<std::size_t>(i)] * (1.0 - cand[i] * cand[i]);
        ln_or_copy(2, pre + ".ln_c", da.data(), dpre.data());
        {
          std::vector<double> u2(static_cast<std::size_t>(H + I));
          std::copy(rh, rh + H, u2.begin());
          std::copy(x, x + I, u2.begin() + H);
          outer_add(g(pre + ".w_c"), H, H + I, dpre.data(), u2.data());
        }
        std::fill(du.begin(), du.end(), 0.0);
        matvec_t_add(w(pre + ".w_c"), H, H + I, dpre.data(), du.data());
        for (int i = 0; i < H; ++i) {
          dr[static_cast<std::size_t>(i)] = du[static_cast<std::size_t>(i)] * h_prev[i];
          dh_prev[static_cast<std::size_t>(i)] += du[static_cast<std::size_t>(i)] * r[i];
        }
        for (int i = 0; i < I; ++i) dx[i] += du[static_cast<std::size_t>(H + i)];

        // update gate
        for (int i = 0; i < H; ++i) da[static_cast<std::size_t>(i)] = dz[static_cast<std::size_t>(i)] * z[i] * (1.0 - z[i]);
        ln_or_copy(1, pre + ".ln_z", da.data(), dpre.data());
        outer_add(g(pre + ".w_z"), H, H + I, dpre.data(), u.data());
        std::fill(du.begin(), du.end(), 0.0);
        matvec_t_add(w(pre + ".w_z"), H, H + I, dpre.data(), du.data());
        for (int i = 0; i < H; ++i) dh_prev[static_cast<std::size_t>(i)] += du[static_cast<std::size_t>(i)];
        for (int i = 0; i < I; ++i) dx[i] += du[static_cast<std::size_t>(H + i)];

        // reset gate
        for (int i = 0; i < H; ++i) da[static_cast<std::size_t>(i)] = dr[static_cast<std::size_t>(i)] * r[i] * (1.0 - r[i]);
        ln_or_copy(0, pre + ".ln_r", da.data(), dpre.data());
        outer_add(g(pre + ".w_r"), H, H + I, dpre.data(), u.data());
        std::fill(du.begin(), du.end(), 0.0);
        matvec_t_add(w(pre + ".w_r"), H, H + I, dpre.data(), du.data());
        for (int i = 0; i < H; ++i) dh_prev[static_cast<std::size_t>(i)] += du[static_cast<std::size_t>(i)];
        for (int i = 0; i < I; ++i) dx[i] += du[static_cast<std::size_t>(H + i)];
        break;
      }
    }
    dh = dh_prev;
  }
}

}  // namespace

void backward(const ForwardTrace& tr, const ModelParams& params, double d_loss_d_prob,
              std::vector<double>& grads) {
  const EncoderConfig& cfg = params.config;
  if (grads.size() != params.flat.size()) {
    throw NumericError("gradient buffer size mismatch");
  }
  const int D = cfg.encoded_dim();
  const int H = cfg.hidden;
  const int fused_dim = cfg.fused_dim();

  const double dlogit = d_loss_d_prob * tr.prob * (1.0 - tr.prob);

  double* ghead_w = grads.data() + params.view("head.w").offset;
  double* ghead_b = grads.data() + params.view("head.b").offset;
  const double* hw = params.data("head.w");
  ghead_b[0] += dlogit;
  for (int i = 0; i < fused_dim; ++i) {
    ghead_w[i] += dlogit * tr.fused[static_cast<std::size_t>(i)];
  }

  std::vector<double> dh_final(static_cast<std::size_t>(D));
  for (int i = 0; i < D; ++i) {
    dh_final[static_cast<std::size_t>(i)] =
        dlogit * hw[i] * tr.dropout_mask[static_cast<std::size_t>(i)];
  }

  std::vector<double> dinputs(tr.inputs.size(), 0.0);
  const int n_dirs = cfg.bidirectional ? 2 : 1;
  for (int d = 0; d < n_dirs; ++d) {
    backward_direction(params, tr, d, dh_final.data() + static_cast<std::ptrdiff_t>(d) * H,
                       grads, dinputs);
  }

  // Only the looked-up embedding row receives gradient.
  const int F = cfg.feature_dim;
  const int E = cfg.embed_dim;
  const int I = cfg.input_dim();
  double* gembed = grads.data() + params.view("embed").offset +
                   static_cast<std::size_t>(tr.task_index) * E;
  for (int t = 0; t < tr.steps; ++t) {
    const double* dx = dinputs.data() + static_cast<std::size_t>(t) * I;
    for (int e = 0; e < E; ++e) gembed[e] += dx[F + e];
  }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }
void put_i32(std::string& out, std::int32_t v) { out.append(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::string& out, std::uint64_t v) { out.append(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::string& out, double v) { out.append(reinterpret_cast<const char*>(&v), 8); }

struct Reader {
  const std::string& blob;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > blob.size()) throw DataError("truncated checkpoint");
  }
  std::uint32_t u32() { need(4); std::uint32_t v; std::memcpy(&v, blob.data() + pos, 4); pos += 4; return v; }
  std::int32_t i32() { need(4); std::int32_t v; std::memcpy(&v, blob.data() + pos, 4); pos += 4; return v; }
  std::uint64_t u64() { need(8); std::uint64_t v; std::memcpy(&v, blob.data() + pos, 8); pos += 8; return v; }
  double f64() { need(8); double v; std::memcpy(&v, blob.data() + pos, 8); pos += 8; return v; }
  std::string bytes(std::size_t n) { need(n); std::string s = blob.substr(pos, n); pos += n; return s; }
};

constexpr std::uint32_t kCheckpointMagic = 0x4B435748;  // "HWCK" little-endian
constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

std::string checkpoint_serialize(const ModelParams& params) {
  const EncoderConfig& cfg = params.config;
  std::string out;
  put_u32(out, kCheckpointMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(cfg.cell));
  put_i32(out, cfg.hidden);
  put_u32(out, cfg.bidirectional ? 1 : 0);
  put_f64(out, cfg.dropout);
  put_i32(out, cfg.embed_dim);
  put_i32(out, cfg.n_tasks);
  put_i32(out, cfg.feature_dim);
  put_u32(out, cfg.layer_norm ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(params.manifest.size()));
  for (const auto& v : params.manifest) {
    put_u32(out, static_cast<std::uint32_t>(v.name.size()));
    out += v.name;
    put_i32(out, v.rows);
    put_i32(out, v.cols);
    put_u64(out, v.offset);
  }
  put_u64(out, params.flat.size());
  out.append(reinterpret_cast<const char*>(params.flat.data()), params.flat.size() * sizeof(double));
  return out;
}

ModelParams checkpoint_deserialize(const std::string& blob) {
  Reader r{blob};
  if (r.u32() != kCheckpointMagic) throw DataError("not a checkpoint file");
  if (r.u32() != kCheckpointVersion) throw DataError("unsupported checkpoint version");

  EncoderConfig cfg;
  cfg.cell = static_cast<CellKind>(r.u32());
  cfg.hidden = r.i32();
  cfg.bidirectional = r.u32() != 0;
  cfg.dropout = r.f64();
  cfg.embed_dim = r.i32();
  cfg.n_tasks = r.i32();
  cfg.feature_dim = r.i32();
  cfg.layer_norm = r.u32() != 0;

  Rng throwaway(0);
  ModelParams params = ModelParams::init(cfg, throwaway);

  const std::uint32_t n = r.u32();
  if (n != params.manifest.size()) throw DataError("checkpoint manifest mismatch");
  for (const auto& expect : params.manifest) {
    const auto len = r.u32();
    const std::string name = r.bytes(len);
    const auto rows = r.i32();
    const auto cols = r.i32();
    const auto offset = r.u64();
    if (name != expect.name || rows != expect.rows || cols != expect.cols ||
        offset != expect.offset) {
      throw DataError("checkpoint manifest entry mismatch at '" + name + "'");
    }
  }
  const auto flat_size = r.u64();
  if (flat_size != params.flat.size()) throw DataError("checkpoint parameter count mismatch");
  r.need(flat_size * sizeof(double));
  std::memcpy(params.flat.data(), blob.data() + r.pos, flat_size * sizeof(double));
  return params;
}

}  // namespace hwad::nn
