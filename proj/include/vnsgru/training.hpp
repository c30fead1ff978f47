// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vnsgru/data.hpp"
#include "vnsgru/decoder.hpp"
#include "vnsgru/metrics.hpp"
#include "vnsgru/selection.hpp"
#include "vnsgru/tape.hpp"

namespace vnsgru {

/// How many annotations per video to sample each epoch once the weighted
/// phase starts. The absolute exponential doubles every sigma epochs from
/// epoch 0; the relative one grows as base^((epoch - switch)/sigma).
enum class ScheduleKind { fixed, exponential_absolute, exponential_relative };

struct TrainConfig {
  std::size_t epoch_total = 30;
  std::size_t epoch_sw = 16; // uniform single-annotation phase before this
  double gamma = 0.8;        // loss-driven vs length-driven weight balance
  ScheduleKind schedule = ScheduleKind::exponential_absolute;
  std::size_t fixed_n = 16; // annotations per video, fixed schedule
  std::size_t sigma = 16;   // doubling period of the exponential schedules
  double exp_base = 2.0;    // growth base of the relative schedule
  std::size_t batch_size = 8;
  double lr0 = 2e-4;
  double decay_factor = 0.861;
  std::size_t decay_interval = 1000; // optimizer steps per decay notch
  double clip_norm = 40.0;
  KeepRates keep;
  bool use_variational_dropout = true;
  bool use_layer_norm = true;
  std::size_t max_decode_len = 16; // cap for validation decoding
  std::uint64_t seed = 0;
};

/// ConfigError on any out-of-range field.
void validate(const TrainConfig& cfg);

/// Annotations to sample per video at this epoch: 1 before the switch
/// epoch, then the configured schedule, never more than `available`.
std::size_t sampling_size(std::size_t epoch, const TrainConfig& cfg,
                          std::size_t available);

/// Mean over time steps of -log p(gold token). Probabilities below 1e-12
/// are clamped there; each clamp bumps *clamp_warnings when given.
double per_annotation_loss(const std::vector<Tensor>& dists,
                           const std::vector<int>& annotation,
                           std::size_t* clamp_warnings = nullptr);

/// Tape version of the same loss for training. Clamped positions contribute
/// a constant (zero-gradient) floor term.
Var annotation_loss_vars(Tape& t, const std::vector<Var>& dists,
                         const std::vector<int>& annotation,
                         std::size_t* clamp_warnings = nullptr);

/// Per-annotation weights: gamma * softmax(-losses)
/// + (1 - gamma) * softmax(-|length - mean_len|). Positive, sums to 1.
std::vector<double> professional_weights(const std::vector<double>& losses,
                                         const std::vector<double>& lengths,
                                         double mean_len, double gamma);

struct ProfessionalBatch {
  struct Video {
    std::vector<std::vector<int>> annotations;
    std::vector<double> lengths; // token counts of the sampled annotations
    std::vector<double> losses;
    std::vector<double> weights;
  };
  std::vector<Video> videos;
  double mean_len = 0.0; // training-split mean caption length
};

/// (1/batch) * sum over videos of (weights . losses). DimensionError when a
/// video's weights and losses disagree in length.
double weighted_batch_loss(const ProfessionalBatch& batch);

struct AdamState {
  std::vector<Tensor> m, v; // first/second moment, aligned with the params
  std::size_t step = 0;
};
AdamState init_adam(const std::vector<NamedParam>& params);

/// Standard bias-corrected Adam update. Parameters are rounded to 32-bit
/// storage precision after the step so the in-memory model always equals
/// its checkpointed form; moments stay at full precision. A non-finite
/// gradient raises NumericError naming the parameter.
void adam_step(std::vector<NamedParam>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

/// Scales all gradients by max_norm/norm when the joint L2 norm exceeds
/// max_norm; returns the pre-clip norm.
double clip_global_norm(std::vector<Tensor>& grads, double max_norm);

/// lr0 * factor^floor(step / interval).
double decayed_lr(std::size_t step, double lr0, double factor, std::size_t interval);

struct ModelDims {
  std::size_t n_x = 16;
  std::size_t n_h = 24;
  std::size_t n_f = 8;
};

struct RunConfig {
  TrainConfig train;
  ModelDims dims;
  std::vector<std::string> metric_names = {"B4", "C", "M", "R"};
  std::vector<double> metric_weights = {0.25, 0.25, 0.25, 0.25};
  std::string out_dir; // empty keeps everything in memory
};

/// Maps a validation report (plus validation loss) to the metric values the
/// selection state consumes each epoch.
using MetricExtractor =
    std::function<std::vector<double>(const MetricReport&, double validation_loss)>;

/// Builds the extractor for names among B4/C/M/R plus the degenerate "XE"
/// (negated validation loss, so lower loss scores higher).
MetricExtractor extractor_for(const std::vector<std::string>& names);

struct EpochInfo {
  std::size_t epoch = 0;
  bool weighted_phase = false;
  std::size_t n = 1;           // annotations sampled per video
  double train_loss = 0.0;     // unweighted mean annotation loss
  double validation_loss = 0.0;
  double lr = 0.0;             // rate used for the epoch's last step
  MetricReport report;         // greedy validation decoding
  double overall = 0.0;
  bool saved = false;
};

struct TrainResult {
  Vocabulary vocab;
  DecoderParams params;   // state after the final epoch
  DecoderParams champion; // selected checkpoint
  std::size_t champion_epoch = 0;
  std::vector<EpochInfo> epochs;
  std::string log;         // one tab-separated line per epoch
  std::string history_tsv; // selection history dump
  std::size_t clamp_warnings = 0;
};

/// Full training loop: builds the vocabulary from the training split,
/// initializes the model, then per epoch samples annotations per the
/// schedule, optimizes the weighted loss, scores greedy validation decoding
/// and lets the selection state pick the champion. Deterministic given
/// (dataset, config). When out_dir is set, writes champion.ckpt, vocab.tsv,
/// selection.tsv and train.log there.
TrainResult run_training(const Dataset& dataset, const RunConfig& config,
                         MetricExtractor extractor = {});

} // namespace vnsgru
