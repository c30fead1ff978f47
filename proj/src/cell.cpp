// SPDX-License-Identifier: Apache-2.0

#include "vnsgru/cell.hpp"

#include <cmath>
#include <string>

namespace vnsgru {

namespace {

void check_dims(const CellDims& d) {
  if (d.n_x == 0 || d.n_h == 0 || d.n_f == 0 || d.n_s == 0 || d.n_v == 0)
    throw ConfigError("cell dims must all be positive");
}

GateParams init_gate(const CellDims& d, Rng& rng) {
  GateParams g;
  g.w1 = glorot_init(d.n_f, d.n_s, rng);
  g.w2 = glorot_init(d.n_f, d.n_x, rng);
  g.w3 = glorot_init(d.n_h, d.n_f, rng);
  g.u1 = glorot_init(d.n_f, d.n_s, rng);
  g.u2 = glorot_init(d.n_f, d.n_h, rng);
  g.u3 = glorot_init(d.n_h, d.n_f, rng);
  g.v1 = glorot_init(d.n_f, d.n_s, rng);
  g.v2 = glorot_init(d.n_f, d.n_v, rng);
  g.v3 = glorot_init(d.n_h, d.n_f, rng);
  g.ln_gain = Tensor::ones({d.n_h});
  g.ln_bias = Tensor::zeros({d.n_h});
  return g;
}

Tensor mask_vector(std::size_t n, double keep, Rng& rng) {
  Tensor m = Tensor::zeros({n});
  const double scaled = 1.0 / keep;
  for (double& v : m.data) v = rng.bernoulli(keep) ? scaled : 0.0;
  return m;
}

StreamMasks gate_masks(const KeepRates& k, const CellDims& d, Rng& rng) {
  StreamMasks m;
  m.x = mask_vector(d.n_x, k.x, rng);
  m.h = mask_vector(d.n_h, k.h, rng);
  m.v = mask_vector(d.n_v, k.v, rng);
  m.s = mask_vector(d.n_s, k.s, rng);
  return m;
}

void check_rate(double p) {
  if (!(p > 0.0) || p > 1.0)
    throw ConfigError("dropout keep rate must be in (0,1], got " + std::to_string(p));
}

GateVars attach_gate(Tape& t, const GateParams& g) {
  GateVars v;
  v.w1 = t.leaf(g.w1);
  v.w2 = t.leaf(g.w2);
  v.w3 = t.leaf(g.w3);
  v.u1 = t.leaf(g.u1);
  v.u2 = t.leaf(g.u2);
  v.u3 = t.leaf(g.u3);
  v.v1 = t.leaf(g.v1);
  v.v2 = t.leaf(g.v2);
  v.v3 = t.leaf(g.v3);
  v.ln_gain = t.leaf(g.ln_gain);
  v.ln_bias = t.leaf(g.ln_bias);
  return v;
}

GateMaskVars attach_gate_masks(Tape& t, const StreamMasks& m) {
  return {t.leaf(m.x), t.leaf(m.h), t.leaf(m.v), t.leaf(m.s)};
}

SeqVars::PerGate gate_invariants(Tape& t, const GateVars& g, const GateMaskVars& m,
                                 Var s, Var v) {
  SeqVars::PerGate out;
  Var s_m = t.mul(s, m.s);
  out.ws = t.matmul(g.w1, s_m);
  out.us = t.matmul(g.u1, s_m);
  Var vs = t.matmul(g.v1, s_m);
  Var v_m = t.mul(v, m.v);
  out.v_hat = t.mul(vs, t.matmul(g.v2, v_m));
  out.v_term = t.matmul(g.v3, out.v_hat);
  return out;
}

Var maybe_ln(Tape& t, const CellVars& p, const GateVars& g, Var pre) {
  if (p.ln == LnMode::identity) return pre;
  return t.layer_norm(pre, g.ln_gain, g.ln_bias, p.ln_eps);
}

StepTrace trace_from_vars(const Tape& t, const StepVars& sv, const SeqVars& inv) {
  StepTrace tr;
  tr.z = t.value(sv.z);
  tr.r = t.value(sv.r);
  tr.h_cand = t.value(sv.h_cand);
  tr.h = t.value(sv.h);
  tr.x_hat = {t.value(sv.x_hat.z), t.value(sv.x_hat.r), t.value(sv.x_hat.c)};
  tr.h_hat = {t.value(sv.h_hat.z), t.value(sv.h_hat.r), t.value(sv.h_hat.c)};
  tr.v_hat = {t.value(inv.z.v_hat), t.value(inv.r.v_hat), t.value(inv.c.v_hat)};
  return tr;
}

} // namespace

Tensor glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Tensor t = Tensor::zeros({rows, cols});
  for (double& v : t.data) v = rng.uniform(-limit, limit);
  round_to_storage_precision(t);
  return t;
}

GruParams init_gru_params(std::size_t n_x, std::size_t n_h, std::uint64_t seed) {
  if (n_x == 0 || n_h == 0) throw ConfigError("gru dims must be positive");
  Rng rng(seed);
  GruParams p;
  p.n_x = n_x;
  p.n_h = n_h;
  p.wz = glorot_init(n_h, n_x, rng);
  p.uz = glorot_init(n_h, n_h, rng);
  p.wr = glorot_init(n_h, n_x, rng);
  p.ur = glorot_init(n_h, n_h, rng);
  p.wc = glorot_init(n_h, n_x, rng);
  p.uc = glorot_init(n_h, n_h, rng);
  return p;
}

CellParams init_params(const CellDims& dims, std::uint64_t seed) {
  Rng rng(seed);
  return init_params(dims, rng);
}

CellParams init_params(const CellDims& dims, Rng& rng) {
  check_dims(dims);
  CellParams p;
  p.dims = dims;
  p.z = init_gate(dims, rng);
  p.r = init_gate(dims, rng);
  p.c = init_gate(dims, rng);
  return p;
}

std::size_t param_count(const CellParams& p) {
  std::size_t n = 0;
  for (const GateParams* g : {&p.z, &p.r, &p.c}) {
    n += g->w1.size() + g->w2.size() + g->w3.size();
    n += g->u1.size() + g->u2.size() + g->u3.size();
    n += g->v1.size() + g->v2.size() + g->v3.size();
    n += g->ln_gain.size() + g->ln_bias.size();
  }
  return n;
}

DropoutMasks sample_masks(double p_keep, const CellDims& dims, Rng& rng) {
  check_rate(p_keep);
  KeepRates k{p_keep, p_keep, p_keep, p_keep};
  return sample_masks(k, dims, rng);
}

DropoutMasks sample_masks(const KeepRates& rates, const CellDims& dims, Rng& rng) {
  check_dims(dims);
  check_rate(rates.x);
  check_rate(rates.h);
  check_rate(rates.v);
  check_rate(rates.s);
  DropoutMasks m;
  m.z = gate_masks(rates, dims, rng);
  m.r = gate_masks(rates, dims, rng);
  m.c = gate_masks(rates, dims, rng);
  return m;
}

DropoutMasks unit_masks(const CellDims& dims) {
  check_dims(dims);
  StreamMasks g{Tensor::ones({dims.n_x}), Tensor::ones({dims.n_h}),
                Tensor::ones({dims.n_v}), Tensor::ones({dims.n_s})};
  return {g, g, g};
}

CellVars attach_cell(Tape& t, const CellParams& p, LnMode ln, double ln_eps) {
  CellVars v;
  v.dims = p.dims;
  v.ln = ln;
  v.ln_eps = ln_eps;
  v.z = attach_gate(t, p.z);
  v.r = attach_gate(t, p.r);
  v.c = attach_gate(t, p.c);
  return v;
}

MaskVars attach_masks(Tape& t, const DropoutMasks& m) {
  return {attach_gate_masks(t, m.z), attach_gate_masks(t, m.r), attach_gate_masks(t, m.c)};
}

SeqVars sequence_invariants(Tape& t, const CellVars& p, const MaskVars& m, Var s, Var v) {
  SeqVars inv;
  inv.z = gate_invariants(t, p.z, m.z, s, v);
  inv.r = gate_invariants(t, p.r, m.r, s, v);
  inv.c = gate_invariants(t, p.c, m.c, s, v);
  return inv;
}

StepVars cell_step(Tape& t, const CellVars& p, const MaskVars& m, const SeqVars& inv,
                   Var x, Var h_prev) {
  StepVars out;

  auto gate_pre = [&t](const GateVars& g, const GateMaskVars& gm,
                       const SeqVars::PerGate& gi, Var x_in, Var h_in, Var& x_hat,
                       Var& h_hat) {
    x_hat = t.mul(gi.ws, t.matmul(g.w2, t.mul(x_in, gm.x)));
    h_hat = t.mul(gi.us, t.matmul(g.u2, t.mul(h_in, gm.h)));
    return std::pair{t.matmul(g.w3, x_hat),
                     t.matmul(g.u3, h_hat)}; // n_h input and hidden terms
  };

  auto [zx, zh] = gate_pre(p.z, m.z, inv.z, x, h_prev, out.x_hat.z, out.h_hat.z);
  Var z_pre = t.add(t.add(zx, zh), inv.z.v_term);
  out.z = t.sigmoid(maybe_ln(t, p, p.z, z_pre));

  auto [rx, rh] = gate_pre(p.r, m.r, inv.r, x, h_prev, out.x_hat.r, out.h_hat.r);
  Var r_pre = t.add(t.add(rx, rh), inv.r.v_term);
  out.r = t.sigmoid(maybe_ln(t, p, p.r, r_pre));

  // Candidate: the reset gate scales the hidden term before normalization.
  auto [cx, ch] = gate_pre(p.c, m.c, inv.c, x, h_prev, out.x_hat.c, out.h_hat.c);
  Var c_pre = t.add(t.add(cx, t.mul(out.r, ch)), inv.c.v_term);
  out.h_cand = t.tanh(maybe_ln(t, p, p.c, c_pre));

  // h_t = (1 - z) ⊙ h_{t-1} + z ⊙ h̃
  out.h = t.add(t.mul(t.affine(out.z, -1.0, 1.0), h_prev), t.mul(out.z, out.h_cand));
  return out;
}

GruVars attach_gru(Tape& t, const GruParams& p) {
  return {t.leaf(p.wz), t.leaf(p.uz), t.leaf(p.wr), t.leaf(p.ur),
          t.leaf(p.wc), t.leaf(p.uc)};
}

StepVars gru_step_vars(Tape& t, const GruVars& p, Var x, Var h_prev) {
  StepVars out;
  out.z = t.sigmoid(t.add(t.matmul(p.wz, x), t.matmul(p.uz, h_prev)));
  out.r = t.sigmoid(t.add(t.matmul(p.wr, x), t.matmul(p.ur, h_prev)));
  out.h_cand = t.tanh(t.add(t.matmul(p.wc, x), t.mul(out.r, t.matmul(p.uc, h_prev))));
  out.h = t.add(t.mul(t.affine(out.z, -1.0, 1.0), h_prev), t.mul(out.z, out.h_cand));
  return out;
}

StepTrace gru_step(const Tensor& x, const Tensor& h_prev, const GruParams& p) {
  Tape t;
  GruVars g = attach_gru(t, p);
  StepVars sv = gru_step_vars(t, g, t.leaf(x), t.leaf(h_prev));
  StepTrace tr;
  tr.z = t.value(sv.z);
  tr.r = t.value(sv.r);
  tr.h_cand = t.value(sv.h_cand);
  tr.h = t.value(sv.h);
  return tr;
}

StepTrace semantic_gru_step(const Tensor& x, const Tensor& h_prev, const Tensor& s,
                            const Tensor& v, const CellParams& p) {
  return vns_gru_step(x, h_prev, s, v, p, unit_masks(p.dims), LnMode::identity);
}

StepTrace vns_gru_step(const Tensor& x, const Tensor& h_prev, const Tensor& s,
                       const Tensor& v, const CellParams& p, const DropoutMasks& masks,
                       LnMode ln) {
  Tape t;
  CellVars cv = attach_cell(t, p, ln);
  MaskVars mv = attach_masks(t, masks);
  SeqVars inv = sequence_invariants(t, cv, mv, t.leaf(s), t.leaf(v));
  StepVars sv = cell_step(t, cv, mv, inv, t.leaf(x), t.leaf(h_prev));
  return trace_from_vars(t, sv, inv);
}

std::vector<Tensor> stacked_forward(const std::vector<Tensor>& x_seq, const Tensor& s,
                                    const Tensor& v, const CellParams& layer1,
                                    const CellParams& layer2, const DropoutMasks& masks1,
                                    const DropoutMasks& masks2, LnMode ln) {
  if (layer2.dims.n_x != layer1.dims.n_h)
    throw ConfigError("stacked_forward: layer-2 input width " +
                      std::to_string(layer2.dims.n_x) + " != layer-1 hidden width " +
                      std::to_string(layer1.dims.n_h));
  std::vector<Tensor> out;
  if (x_seq.empty()) return out;
  out.reserve(x_seq.size());

  Tape t;
  CellVars c1 = attach_cell(t, layer1, ln);
  CellVars c2 = attach_cell(t, layer2, ln);
  MaskVars m1 = attach_masks(t, masks1);
  MaskVars m2 = attach_masks(t, masks2);
  Var s_var = t.leaf(s);
  Var v_var = t.leaf(v);
  SeqVars inv1 = sequence_invariants(t, c1, m1, s_var, v_var);
  SeqVars inv2 = sequence_invariants(t, c2, m2, s_var, v_var);
  Var h1 = t.leaf(Tensor::zeros({layer1.dims.n_h}));
  Var h2 = t.leaf(Tensor::zeros({layer2.dims.n_h}));
  for (const Tensor& x : x_seq) {
    Var xv = t.leaf(x);
    h1 = cell_step(t, c1, m1, inv1, xv, h1).h;
    h2 = cell_step(t, c2, m2, inv2, h1, h2).h;
    out.push_back(t.value(h2));
  }
  return out;
}

} // namespace vnsgru
