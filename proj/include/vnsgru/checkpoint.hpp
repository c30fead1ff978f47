// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "vnsgru/decoder.hpp"
#include "vnsgru/tensor.hpp"

namespace vnsgru {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Binary model file: little-endian, magic "VNSG", u32 version, u32 tensor
/// count; per tensor a u32 name length, the UTF-8 name, u32 rank, u32 dims,
/// then raw 32-bit floats. Writes go to a temp file renamed into place so a
/// crash never leaves a half-written champion.
void save_checkpoint(const std::vector<NamedParam>& params, const std::string& path);
void save_checkpoint(const std::vector<NamedTensor>& tensors, const std::string& path);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

/// Reassembles a decoder from checkpoint tensors, inferring all dimensions
/// from the stored shapes. Throws FormatError on missing tensors and
/// ConfigError on inconsistent shapes.
DecoderParams decoder_from_tensors(const std::vector<NamedTensor>& tensors);
DecoderParams load_decoder(const std::string& path);

} // namespace vnsgru
