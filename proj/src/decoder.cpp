// SPDX-License-Identifier: Apache-2.0

#include "vnsgru/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vnsgru {

namespace {

void check_tokens(const std::vector<int>& annotation, std::size_t vocab) {
  for (int id : annotation)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab)
      throw DomainError("vocabulary: token id " + std::to_string(id) +
                        " outside vocabulary of size " + std::to_string(vocab));
}

void append_gate_refs(std::vector<NamedParam>& out, const std::string& prefix,
                      GateParams& g) {
  out.push_back({prefix + ".w1", &g.w1});
  out.push_back({prefix + ".w2", &g.w2});
  out.push_back({prefix + ".w3", &g.w3});
  out.push_back({prefix + ".u1", &g.u1});
  out.push_back({prefix + ".u2", &g.u2});
  out.push_back({prefix + ".u3", &g.u3});
  out.push_back({prefix + ".v1", &g.v1});
  out.push_back({prefix + ".v2", &g.v2});
  out.push_back({prefix + ".v3", &g.v3});
  out.push_back({prefix + ".ln_gain", &g.ln_gain});
  out.push_back({prefix + ".ln_bias", &g.ln_bias});
}

void append_gate_vars(std::vector<Var>& out, const GateVars& g) {
  out.insert(out.end(),
             {g.w1, g.w2, g.w3, g.u1, g.u2, g.u3, g.v1, g.v2, g.v3, g.ln_gain, g.ln_bias});
}

/// Shared decode loop state: one tape carrying the attached model, unit
/// masks and the per-video invariants, so inference uses the exact training
/// forward path.
struct DecodeContext {
  Tape tape;
  DecoderVars vars;
  MaskVars m1, m2;
  SeqVars inv1, inv2;
  const DecoderParams* params;

  DecodeContext(const DecoderParams& p, const Tensor& s, const Tensor& v, LnMode ln)
      : params(&p) {
    vars = attach_decoder(tape, p, ln);
    DropoutMasks unit1 = unit_masks(p.layer1.dims);
    DropoutMasks unit2 = unit_masks(p.layer2.dims);
    m1 = attach_masks(tape, unit1);
    m2 = attach_masks(tape, unit2);
    Var s_var = tape.leaf(s);
    Var v_var = tape.leaf(v);
    inv1 = sequence_invariants(tape, vars.layer1, m1, s_var, v_var);
    inv2 = sequence_invariants(tape, vars.layer2, m2, s_var, v_var);
  }

  std::pair<Var, Var> step(int token, Var h1, Var h2) {
    Var x = tape.row(vars.embedding, static_cast<std::size_t>(token));
    Var h1n = cell_step(tape, vars.layer1, m1, inv1, x, h1).h;
    Var h2n = cell_step(tape, vars.layer2, m2, inv2, h1n, h2).h;
    return {h1n, h2n};
  }

  Var zero_state(std::size_t n) { return tape.leaf(Tensor::zeros({n})); }

  /// Next-token probabilities from a hidden state; UNK is masked out before
  /// normalization so it can never be emitted.
  Tensor probs(Var h2) {
    Tensor logits = vnsgru::add(matvec_t(params->proj, tape.value(h2)), params->proj_bias);
    logits.data[static_cast<std::size_t>(params->specials.unk)] =
        -std::numeric_limits<double>::infinity();
    return vnsgru::softmax(logits);
  }
};

std::size_t argmax_lowest(const Tensor& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p.data[i] > p.data[best]) best = i;
  return best;
}

} // namespace

DecoderParams init_decoder(std::size_t vocab, const CellDims& layer1_dims,
                           std::uint64_t seed) {
  if (vocab < 4) throw ConfigError("vocabulary must hold at least the special tokens");
  CellDims d2 = layer1_dims;
  d2.n_x = layer1_dims.n_h;
  Rng rng(seed);
  DecoderParams p;
  p.embedding = glorot_init(vocab, layer1_dims.n_x, rng);
  p.proj = glorot_init(layer1_dims.n_h, vocab, rng);
  p.proj_bias = Tensor::zeros({vocab});
  p.layer1 = init_params(layer1_dims, rng);
  p.layer2 = init_params(d2, rng);
  round_to_storage_precision(p.proj_bias);
  return p;
}

std::vector<NamedParam> param_refs(DecoderParams& p) {
  std::vector<NamedParam> out;
  out.push_back({"embedding", &p.embedding});
  out.push_back({"proj", &p.proj});
  out.push_back({"proj_bias", &p.proj_bias});
  append_gate_refs(out, "layer1.z", p.layer1.z);
  append_gate_refs(out, "layer1.r", p.layer1.r);
  append_gate_refs(out, "layer1.c", p.layer1.c);
  append_gate_refs(out, "layer2.z", p.layer2.z);
  append_gate_refs(out, "layer2.r", p.layer2.r);
  append_gate_refs(out, "layer2.c", p.layer2.c);
  return out;
}

DecoderVars attach_decoder(Tape& t, const DecoderParams& p, LnMode ln) {
  DecoderVars v;
  v.embedding = t.leaf(p.embedding);
  v.proj = t.leaf(p.proj);
  v.proj_bias = t.leaf(p.proj_bias);
  v.layer1 = attach_cell(t, p.layer1, ln);
  v.layer2 = attach_cell(t, p.layer2, ln);
  v.specials = p.specials;
  return v;
}

std::vector<Var> decoder_param_vars(const DecoderVars& v) {
  std::vector<Var> out{v.embedding, v.proj, v.proj_bias};
  for (const CellVars* c : {&v.layer1, &v.layer2}) {
    append_gate_vars(out, c->z);
    append_gate_vars(out, c->r);
    append_gate_vars(out, c->c);
  }
  return out;
}

std::vector<Var> teacher_forced_vars(Tape& t, const DecoderVars& d, const Tensor& s,
                                     const Tensor& v, const std::vector<int>& annotation,
                                     const MaskVars& m1, const MaskVars& m2) {
  const std::size_t vocab = t.value(d.embedding).rows();
  check_tokens(annotation, vocab);
  Var s_var = t.leaf(s);
  Var v_var = t.leaf(v);
  SeqVars inv1 = sequence_invariants(t, d.layer1, m1, s_var, v_var);
  SeqVars inv2 = sequence_invariants(t, d.layer2, m2, s_var, v_var);
  Var h1 = t.leaf(Tensor::zeros({d.layer1.dims.n_h}));
  Var h2 = t.leaf(Tensor::zeros({d.layer2.dims.n_h}));

  std::vector<Var> dists;
  dists.reserve(annotation.size());
  for (std::size_t step = 0; step < annotation.size(); ++step) {
    const int tok = (step == 0) ? d.specials.bos : annotation[step - 1];
    Var x = t.row(d.embedding, static_cast<std::size_t>(tok));
    h1 = cell_step(t, d.layer1, m1, inv1, x, h1).h;
    h2 = cell_step(t, d.layer2, m2, inv2, h1, h2).h;
    Var logits = t.add(t.matvec_t(d.proj, h2), d.proj_bias);
    dists.push_back(t.softmax(logits));
  }
  return dists;
}

std::vector<Tensor> teacher_forced_forward(const Tensor& s, const Tensor& v,
                                           const std::vector<int>& annotation,
                                           const DecoderParams& p,
                                           const DropoutMasks& masks1,
                                           const DropoutMasks& masks2, bool train_mode,
                                           LnMode ln) {
  Tape t;
  DecoderVars d = attach_decoder(t, p, ln);
  MaskVars m1 = attach_masks(t, train_mode ? masks1 : unit_masks(p.layer1.dims));
  MaskVars m2 = attach_masks(t, train_mode ? masks2 : unit_masks(p.layer2.dims));
  std::vector<Var> dists = teacher_forced_vars(t, d, s, v, annotation, m1, m2);
  std::vector<Tensor> out;
  out.reserve(dists.size());
  for (Var dv : dists) out.push_back(t.value(dv));
  return out;
}

double annotation_loss(const Tensor& s, const Tensor& v, const std::vector<int>& annotation,
                       const DecoderParams& p, LnMode ln) {
  if (annotation.empty()) return 0.0;
  DropoutMasks none1 = unit_masks(p.layer1.dims);
  DropoutMasks none2 = unit_masks(p.layer2.dims);
  std::vector<Tensor> dists =
      teacher_forced_forward(s, v, annotation, p, none1, none2, false, ln);
  double total = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    double prob = dists[i].data[static_cast<std::size_t>(annotation[i])];
    total -= std::log(std::max(prob, 1e-12));
  }
  return total / static_cast<double>(dists.size());
}

std::vector<int> greedy_decode(const Tensor& s, const Tensor& v, const DecoderParams& p,
                               std::size_t max_len, LnMode ln) {
  DecodeContext ctx(p, s, v, ln);
  Var h1 = ctx.zero_state(p.layer1.dims.n_h);
  Var h2 = ctx.zero_state(p.layer2.dims.n_h);
  std::vector<int> out;
  int prev = p.specials.bos;
  for (std::size_t step = 0; step < max_len; ++step) {
    auto [h1n, h2n] = ctx.step(prev, h1, h2);
    h1 = h1n;
    h2 = h2n;
    const std::size_t tok = argmax_lowest(ctx.probs(h2));
    if (static_cast<int>(tok) == p.specials.eos) break;
    out.push_back(static_cast<int>(tok));
    prev = static_cast<int>(tok);
  }
  return out;
}

std::vector<int> beam_decode(const Tensor& s, const Tensor& v, const DecoderParams& p,
                             std::size_t max_len, std::size_t beam, LnMode ln) {
  if (beam == 0) throw ConfigError("beam width must be >= 1");

  struct Hyp {
    std::vector<int> tokens;
    double logp = 0.0;
    std::size_t steps = 0;
    Var h1, h2;
  };
  struct Done {
    std::vector<int> tokens;
    double score; // logp / steps, EOS step included
  };

  DecodeContext ctx(p, s, v, ln);
  std::vector<Hyp> live(1);
  live[0].h1 = ctx.zero_state(p.layer1.dims.n_h);
  live[0].h2 = ctx.zero_state(p.layer2.dims.n_h);
  std::vector<Done> done;

  auto finish = [&done](const Hyp& h) {
    const double denom = static_cast<double>(std::max<std::size_t>(h.steps, 1));
    done.push_back({h.tokens, h.logp / denom});
  };

  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    struct Child {
      std::size_t hyp;
      int token;
      double logp;
    };
    std::vector<Child> children;
    std::vector<std::pair<Var, Var>> advanced(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      const int prev = live[i].tokens.empty() ? p.specials.bos : live[i].tokens.back();
      advanced[i] = ctx.step(prev, live[i].h1, live[i].h2);
      Tensor probs = ctx.probs(advanced[i].second);
      for (std::size_t tok = 0; tok < probs.size(); ++tok) {
        if (probs.data[tok] <= 0.0) continue; // masked or unreachable
        children.push_back({i, static_cast<int>(tok),
                            live[i].logp + std::log(probs.data[tok])});
      }
    }
    // All live hypotheses share the same step count, so ranking by raw
    // log-probability matches ranking by the normalized score here.
    std::stable_sort(children.begin(), children.end(), [](const Child& a, const Child& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      if (a.hyp != b.hyp) return a.hyp < b.hyp;
      return a.token < b.token;
    });
    if (children.size() > beam) children.resize(beam);

    std::vector<Hyp> next;
    next.reserve(children.size());
    for (const Child& c : children) {
      Hyp h;
      h.tokens = live[c.hyp].tokens;
      h.logp = c.logp;
      h.steps = live[c.hyp].steps + 1;
      h.h1 = advanced[c.hyp].first;
      h.h2 = advanced[c.hyp].second;
      if (c.token == p.specials.eos) {
        finish(h);
      } else {
        h.tokens.push_back(c.token);
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
  }
  for (const Hyp& h : live) finish(h);

  std::size_t best = 0;
  for (std::size_t i = 1; i < done.size(); ++i)
    if (done[i].score > done[best].score) best = i;
  return done.empty() ? std::vector<int>{} : done[best].tokens;
}

} // namespace vnsgru
