// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vnsgru/cell.hpp"

namespace vnsgru {

struct SpecialTokens {
  int pad = 0, bos = 1, eos = 2, unk = 3;
};

/// Full generative model: token embedding, two stacked cells, affine
/// projection to vocabulary logits.
struct DecoderParams {
  Tensor embedding; // |V| × n_x
  Tensor proj;      // n_h × |V|
  Tensor proj_bias; // |V|
  CellParams layer1, layer2;
  SpecialTokens specials;

  std::size_t vocab_size() const { return embedding.shape.empty() ? 0 : embedding.shape[0]; }
};

DecoderParams init_decoder(std::size_t vocab, const CellDims& layer1_dims,
                           std::uint64_t seed);

/// Stable enumeration of every tensor in the model. The order defines the
/// optimizer state layout, the checkpoint layout, and the parameter names
/// reported in diagnostics.
struct NamedParam {
  std::string name;
  Tensor* tensor;
};
std::vector<NamedParam> param_refs(DecoderParams& p);

/// The tape-side decoder: parameters attached once, then any number of
/// teacher-forced unrolls can be built against them.
struct DecoderVars {
  Var embedding, proj, proj_bias;
  CellVars layer1, layer2;
  SpecialTokens specials;
};
DecoderVars attach_decoder(Tape& t, const DecoderParams& p,
                           LnMode ln = LnMode::active);
std::vector<Var> decoder_param_vars(const DecoderVars& v);

/// Unrolls the decoder over one annotation of length L with the given mask
/// sets, returning L next-token distributions. Input at t=0 is the BOS
/// embedding, afterwards the embedding of annotation[t-1].
std::vector<Var> teacher_forced_vars(Tape& t, const DecoderVars& d, const Tensor& s,
                                     const Tensor& v, const std::vector<int>& annotation,
                                     const MaskVars& m1, const MaskVars& m2);

/// Eager convenience wrapper; train_mode=false ignores the masks and runs
/// with unit masks. `ln` must match how the model was trained.
std::vector<Tensor> teacher_forced_forward(const Tensor& s, const Tensor& v,
                                           const std::vector<int>& annotation,
                                           const DecoderParams& p,
                                           const DropoutMasks& masks1,
                                           const DropoutMasks& masks2, bool train_mode,
                                           LnMode ln = LnMode::active);

/// Mean teacher-forced cross entropy of one annotation, dropout off.
double annotation_loss(const Tensor& s, const Tensor& v, const std::vector<int>& annotation,
                       const DecoderParams& p, LnMode ln = LnMode::active);

/// Argmax decoding; stops at EOS or max_len, never emits UNK. Returned
/// sequence excludes BOS/EOS.
std::vector<int> greedy_decode(const Tensor& s, const Tensor& v, const DecoderParams& p,
                               std::size_t max_len, LnMode ln = LnMode::active);

/// Beam search scored by length-normalized total log-probability. Width 1
/// reproduces greedy_decode exactly.
std::vector<int> beam_decode(const Tensor& s, const Tensor& v, const DecoderParams& p,
                             std::size_t max_len, std::size_t beam,
                             LnMode ln = LnMode::active);

} // namespace vnsgru
