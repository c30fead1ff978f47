// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vnsgru/rng.hpp"
#include "vnsgru/tensor.hpp"
#include "vnsgru/text.hpp"

namespace vnsgru {

/// Token <-> id bijection with four reserved ids at the front. Ids are
/// assigned by descending corpus count, ties broken lexicographically, so a
/// shuffled corpus yields the identical vocabulary.
class Vocabulary {
public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Vocabulary();

  std::size_t size() const { return tokens_.size(); }

  /// Id for a token, kUnk when the token is not in the vocabulary.
  int id_of(const std::string& token) const;
  bool contains(const std::string& token) const;

  /// Token spelling for an id; out of range ids are a domain error.
  const std::string& token_of(int id) const;

  /// Training-corpus count for an id (0 for the reserved ids).
  long count_of(int id) const;

  /// Appends a token; duplicate insertions are a domain error.
  int add(const std::string& token, long count);

private:
  std::vector<std::string> tokens_;
  std::vector<long> counts_;
  std::unordered_map<std::string, int> index_;
};

/// Builds a vocabulary from raw sentences: tokenize, count, keep tokens with
/// count >= min_count. Everything else maps to the unknown id later.
Vocabulary build_vocabulary(const std::vector<std::string>& corpus,
                            std::size_t min_count = 1);

/// Token ids for a caption with the end-of-sequence id appended; words
/// outside the vocabulary become the unknown id.
std::vector<int> encode_caption(const Vocabulary& vocab, const std::string& caption);

/// Inverse of encode for generated output: joins token spellings with single
/// spaces, skipping the reserved ids.
std::string decode_tokens(const Vocabulary& vocab, const std::vector<int>& ids);

struct VideoRecord {
  std::string id;
  Tensor v; // visual feature vector, entries in [0, 1]
  Tensor s; // semantic feature vector, entries in [0, 1]
  std::vector<std::string> captions;
  std::vector<std::vector<int>> annotations; // filled by encode_dataset
};

struct SplitIds {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

struct Dataset {
  std::string name;
  std::size_t n_v = 0;
  std::size_t n_s = 0;
  std::string features_file; // file name recorded next to the manifest
  SplitIds splits;
  std::vector<VideoRecord> records;

  const VideoRecord& by_id(const std::string& id) const;

  /// Records of one split ("train", "validation" or "test") in split order.
  std::vector<const VideoRecord*> split(const std::string& split_name) const;
};

/// Parses a manifest (JSON) plus its flat binary feature file. Records come
/// back in manifest order; captions are kept as raw text, annotations stay
/// empty until encode_dataset runs. Structural problems raise FormatError
/// (with byte counts for a wrong-size feature file); value-domain problems
/// such as features outside [0, 1] raise DomainError.
Dataset load_dataset(const std::string& manifest_path,
                     const std::string& features_path);

/// Writes the manifest and feature blob so that load_dataset restores the
/// records, splits and features bit-exactly.
void write_dataset(const Dataset& ds, const std::string& manifest_path,
                   const std::string& features_path);

/// Fills every record's annotations from its captions using the vocabulary.
void encode_dataset(Dataset& ds, const Vocabulary& vocab);

/// Caption texts of one split, in split order, one entry per annotation.
std::vector<std::string> split_captions(const Dataset& ds,
                                        const std::string& split_name);

struct SyntheticSpec {
  std::string name = "synthetic";
  std::size_t videos = 0;
  std::size_t themes = 6; // distinct caption topics, at least 2
  std::size_t n_v = 24;
  std::size_t n_s = 12;
  std::size_t annotations_per_video = 8;
  double noise = 0.2; // 0 keeps theme indicator blocks exactly orthogonal
};

/// Builds a small captioning dataset whose features actually predict the
/// captions: each video gets a theme, its feature vectors are noisy
/// indicator blocks for that theme, and its captions are phrase-template
/// variants of the theme sentence. Deterministic per (spec, seed). Splits
/// are sized videos/6 for validation and test, the rest is training data.
Dataset generate_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed);

/// Picks n annotation indices: a random permutation prefix while unused
/// annotations remain, uniform with replacement afterwards. n >= available
/// therefore covers every annotation at least once.
std::vector<std::size_t> sample_annotation_indices(std::size_t available,
                                                   std::size_t n, Rng& rng);

/// Convenience wrapper returning copies of the sampled annotations.
std::vector<std::vector<int>> sample_annotations(const VideoRecord& record,
                                                 std::size_t n, Rng& rng);

struct DistinctStats {
  std::size_t distinct_sentences = 0;
  std::size_t vocabulary_size = 0;
};

/// Unique full sequences and unique tokens over a caption list.
DistinctStats distinct_stats(const std::vector<Tokens>& captions);

/// One `<id>\t<caption>` line per entry, UTF-8.
void write_caption_file(const std::string& path,
                        const std::vector<std::pair<std::string, std::string>>& rows);
std::vector<std::pair<std::string, std::string>> read_caption_file(
    const std::string& path);

/// One `token\tcount` line per id in id order, reserved ids included.
/// read_vocabulary checks that the four reserved spellings come first.
void write_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary read_vocabulary(const std::string& path);

} // namespace vnsgru
