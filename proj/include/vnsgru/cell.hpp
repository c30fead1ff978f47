// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "vnsgru/rng.hpp"
#include "vnsgru/tape.hpp"
#include "vnsgru/tensor.hpp"

namespace vnsgru {

struct CellDims {
  std::size_t n_x = 0; // token embedding width
  std::size_t n_h = 0; // hidden width
  std::size_t n_f = 0; // factorization bottleneck
  std::size_t n_s = 0; // semantic feature width
  std::size_t n_v = 0; // visual feature width
};

/// Plain GRU weights, no biases. Kept as the degenerate baseline the
/// factorized cell must reduce to when its semantic factors are rigged
/// to ones.
struct GruParams {
  std::size_t n_x = 0, n_h = 0;
  Tensor wz, uz, wr, ur, wc, uc;
};

/// One gate of the factorized cell. Effective input weights are
/// (w1*s) ⊙ (w2*x) lifted back to n_h by w3, and likewise for the hidden
/// (u*) and visual (v*) streams. The layer-norm gain/bias pair wraps this
/// gate's full pre-activation.
struct GateParams {
  Tensor w1, w2, w3; // n_f×n_s, n_f×n_x, n_h×n_f
  Tensor u1, u2, u3; // n_f×n_s, n_f×n_h, n_h×n_f
  Tensor v1, v2, v3; // n_f×n_s, n_f×n_v, n_h×n_f
  Tensor ln_gain, ln_bias; // n_h
};

struct CellParams {
  CellDims dims;
  GateParams z, r, c; // update, reset, candidate
};

/// Per-stream inverted-dropout masks for one gate: entries are 0 or
/// 1/keep_rate.
struct StreamMasks {
  Tensor x, h, v, s;
};

/// One mask set per gate, sampled once per sequence and reused at every
/// time step of that sequence.
struct DropoutMasks {
  StreamMasks z, r, c;
};

struct KeepRates {
  double x = 0.8, h = 0.5, v = 0.8, s = 0.8;
};

enum class LnMode { active, identity };

struct GateTriple {
  Tensor z, r, c;
};

/// Everything a single recurrence step produced, for inspection and tests.
struct StepTrace {
  Tensor z, r, h_cand, h;
  GateTriple x_hat, h_hat, v_hat; // factorized n_f intermediates per gate
};

/// Uniform Glorot fill in ±sqrt(6/(rows+cols)), rounded to 32-bit storage
/// precision so freshly initialized weights survive a checkpoint round-trip
/// unchanged.
Tensor glorot_init(std::size_t rows, std::size_t cols, Rng& rng);

GruParams init_gru_params(std::size_t n_x, std::size_t n_h, std::uint64_t seed);
CellParams init_params(const CellDims& dims, std::uint64_t seed);
CellParams init_params(const CellDims& dims, Rng& rng);
std::size_t param_count(const CellParams& p);

DropoutMasks sample_masks(double p_keep, const CellDims& dims, Rng& rng);
DropoutMasks sample_masks(const KeepRates& rates, const CellDims& dims, Rng& rng);
DropoutMasks unit_masks(const CellDims& dims);

// ---- tape builders -------------------------------------------------------
//
// The tape path is the single implementation of the cell math; the eager
// functions below run it on a scratch tape. Training attaches parameters
// once per batch and unrolls many sequences against the same vars.

struct GateVars {
  Var w1, w2, w3, u1, u2, u3, v1, v2, v3, ln_gain, ln_bias;
};

struct CellVars {
  CellDims dims;
  GateVars z, r, c;
  LnMode ln = LnMode::active;
  double ln_eps = 1e-5;
};

struct GateMaskVars {
  Var x, h, v, s;
};

struct MaskVars {
  GateMaskVars z, r, c;
};

/// Per-sequence terms that do not depend on t: the semantic factors and the
/// whole visual branch (s and v are constant across a sequence).
struct SeqVars {
  struct PerGate {
    Var ws, us;   // w1·(s⊙m_s), u1·(s⊙m_s), length n_f
    Var v_hat;    // (v1·(s⊙m_s)) ⊙ (v2·(v⊙m_v)), length n_f
    Var v_term;   // v3·v_hat, length n_h
  };
  PerGate z, r, c;
};

struct StepVars {
  Var z, r, h_cand, h;
  struct {
    Var z, r, c;
  } x_hat, h_hat;
};

CellVars attach_cell(Tape& t, const CellParams& p, LnMode ln = LnMode::active,
                     double ln_eps = 1e-5);
MaskVars attach_masks(Tape& t, const DropoutMasks& m);
SeqVars sequence_invariants(Tape& t, const CellVars& p, const MaskVars& m, Var s, Var v);
StepVars cell_step(Tape& t, const CellVars& p, const MaskVars& m, const SeqVars& inv,
                   Var x, Var h_prev);

struct GruVars {
  Var wz, uz, wr, ur, wc, uc;
};
GruVars attach_gru(Tape& t, const GruParams& p);
StepVars gru_step_vars(Tape& t, const GruVars& p, Var x, Var h_prev);

// ---- eager single-step and sequence API -----------------------------------

StepTrace gru_step(const Tensor& x, const Tensor& h_prev, const GruParams& p);

/// Factorized cell without masks or normalization (unit masks, identity LN
/// on the shared path, so the reduction to this from the full cell is exact).
StepTrace semantic_gru_step(const Tensor& x, const Tensor& h_prev, const Tensor& s,
                            const Tensor& v, const CellParams& p);

StepTrace vns_gru_step(const Tensor& x, const Tensor& h_prev, const Tensor& s,
                       const Tensor& v, const CellParams& p, const DropoutMasks& masks,
                       LnMode ln = LnMode::active);

/// Two-layer unroll from zero initial states; layer 2 consumes layer-1
/// hidden states, both layers see the same s and v. Returns the layer-2
/// hidden sequence.
std::vector<Tensor> stacked_forward(const std::vector<Tensor>& x_seq, const Tensor& s,
                                    const Tensor& v, const CellParams& layer1,
                                    const CellParams& layer2, const DropoutMasks& masks1,
                                    const DropoutMasks& masks2, LnMode ln = LnMode::active);

} // namespace vnsgru
