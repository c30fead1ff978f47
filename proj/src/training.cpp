// SPDX-License-Identifier: Apache-2.0

#include "vnsgru/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "vnsgru/checkpoint.hpp"
#include "vnsgru/errors.hpp"

namespace vnsgru {

namespace {

constexpr double kProbFloor = 1e-12;

std::vector<double> softmax_vec(const std::vector<double>& x) {
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

void require_fraction(const char* what, double v) {
  if (!(v > 0.0 && v <= 1.0))
    throw ConfigError(std::string(what) + " must lie in (0, 1], got " + std::to_string(v));
}

} // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.epoch_total < 1) throw ConfigError("epoch_total must be at least 1");
  if (cfg.epoch_sw > cfg.epoch_total)
    throw ConfigError("epoch_sw " + std::to_string(cfg.epoch_sw) + " exceeds epoch_total " +
                      std::to_string(cfg.epoch_total));
  if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0))
    throw ConfigError("gamma must lie in [0, 1], got " + std::to_string(cfg.gamma));
  if (cfg.fixed_n < 1) throw ConfigError("fixed sampling size must be at least 1");
  if (cfg.sigma < 1) throw ConfigError("schedule period sigma must be at least 1");
  if (!(cfg.exp_base >= 1.0)) throw ConfigError("schedule base must be at least 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(cfg.lr0 > 0.0)) throw ConfigError("learning rate must be positive");
  require_fraction("decay_factor", cfg.decay_factor);
  if (cfg.decay_interval < 1) throw ConfigError("decay_interval must be at least 1");
  if (!(cfg.clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  require_fraction("keep rate x", cfg.keep.x);
  require_fraction("keep rate h", cfg.keep.h);
  require_fraction("keep rate v", cfg.keep.v);
  require_fraction("keep rate s", cfg.keep.s);
  if (cfg.max_decode_len < 1) throw ConfigError("max_decode_len must be at least 1");
}

std::size_t sampling_size(std::size_t epoch, const TrainConfig& cfg,
                          std::size_t available) {
  if (available < 1) throw ConfigError("sampling cap must be at least 1");
  if (epoch < cfg.epoch_sw) return 1;

  std::size_t n = 1;
  switch (cfg.schedule) {
    case ScheduleKind::fixed:
      n = cfg.fixed_n;
      break;
    case ScheduleKind::exponential_absolute: {
      const std::size_t k = std::min<std::size_t>(epoch / cfg.sigma, 62);
      n = static_cast<std::size_t>(1) << k;
      break;
    }
    case ScheduleKind::exponential_relative: {
      const std::size_t k = (epoch - cfg.epoch_sw) / cfg.sigma;
      const double raw = std::pow(cfg.exp_base, static_cast<double>(k));
      n = raw >= static_cast<double>(available)
              ? available
              : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(raw)));
      break;
    }
  }
  return std::min(n, available);
}

double per_annotation_loss(const std::vector<Tensor>& dists,
                           const std::vector<int>& annotation,
                           std::size_t* clamp_warnings) {
  if (dists.size() != annotation.size())
    throw DimensionError("annotation loss: " + std::to_string(dists.size()) +
                         " distributions vs " + std::to_string(annotation.size()) +
                         " tokens");
  if (dists.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const int id = annotation[i];
    if (id < 0 || static_cast<std::size_t>(id) >= dists[i].size())
      throw DomainError("annotation loss: token id " + std::to_string(id) +
                        " outside distribution of size " + std::to_string(dists[i].size()));
    double p = dists[i](static_cast<std::size_t>(id));
    if (p < kProbFloor) {
      p = kProbFloor;
      if (clamp_warnings) ++*clamp_warnings;
    }
    total -= std::log(p);
  }
  return total / static_cast<double>(dists.size());
}

Var annotation_loss_vars(Tape& t, const std::vector<Var>& dists,
                         const std::vector<int>& annotation,
                         std::size_t* clamp_warnings) {
  if (dists.size() != annotation.size())
    throw DimensionError("annotation loss: " + std::to_string(dists.size()) +
                         " distributions vs " + std::to_string(annotation.size()) +
                         " tokens");
  if (dists.empty()) return t.leaf(Tensor::scalar(0.0));

  Var acc{};
  bool any = false;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    const int id = annotation[i];
    Var p = t.pick(dists[i], static_cast<std::size_t>(id));
    Var term;
    if (t.value(p)(0) < kProbFloor) {
      // Floor term: constant, so clamped positions stop pushing gradient.
      term = t.leaf(Tensor::scalar(std::log(kProbFloor)));
      if (clamp_warnings) ++*clamp_warnings;
    } else {
      term = t.log(p);
    }
    acc = any ? t.add(acc, term) : term;
    any = true;
  }
  return t.scale(acc, -1.0 / static_cast<double>(dists.size()));
}

std::vector<double> professional_weights(const std::vector<double>& losses,
                                         const std::vector<double>& lengths,
                                         double mean_len, double gamma) {
  if (losses.empty()) throw DomainError("professional weights: empty loss vector");
  if (losses.size() != lengths.size())
    throw DimensionError("professional weights: " + std::to_string(losses.size()) +
                         " losses vs " + std::to_string(lengths.size()) + " lengths");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw ConfigError("gamma must lie in [0, 1], got " + std::to_string(gamma));

  std::vector<double> neg_loss(losses.size()), neg_dist(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    neg_loss[i] = -losses[i];
    neg_dist[i] = -std::abs(lengths[i] - mean_len);
  }
  const std::vector<double> a = softmax_vec(neg_loss);
  const std::vector<double> b = softmax_vec(neg_dist);
  std::vector<double> beta(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i)
    beta[i] = gamma * a[i] + (1.0 - gamma) * b[i];
  return beta;
}

double weighted_batch_loss(const ProfessionalBatch& batch) {
  if (batch.videos.empty()) throw DomainError("weighted loss: empty batch");
  double total = 0.0;
  for (const ProfessionalBatch::Video& vid : batch.videos) {
    if (vid.weights.size() != vid.losses.size())
      throw DimensionError("weighted loss: " + std::to_string(vid.weights.size()) +
                           " weights vs " + std::to_string(vid.losses.size()) + " losses");
    for (std::size_t i = 0; i < vid.weights.size(); ++i)
      total += vid.weights[i] * vid.losses[i];
  }
  return total / static_cast<double>(batch.videos.size());
}

AdamState init_adam(const std::vector<NamedParam>& params) {
  AdamState st;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const NamedParam& p : params) {
    st.m.push_back(Tensor::zeros(p.tensor->shape));
    st.v.push_back(Tensor::zeros(p.tensor->shape));
  }
  return st;
}

void adam_step(std::vector<NamedParam>& params, const std::vector<Tensor>& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw DimensionError("adam: parameter, gradient and state counts disagree");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i].tensor;
    const Tensor& g = grads[i];
    if (!g.same_shape(p))
      throw DimensionError("adam: gradient shape " + shape_str(g) + " vs parameter '" +
                           params[i].name + "' " + shape_str(p));
    if (!g.all_finite())
      throw NumericError("adam: non-finite gradient for '" + params[i].name + "'");
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m.data[j] = beta1 * m.data[j] + (1.0 - beta1) * g.data[j];
      v.data[j] = beta2 * v.data[j] + (1.0 - beta2) * g.data[j] * g.data[j];
      const double mhat = m.data[j] / bc1;
      const double vhat = v.data[j] / bc2;
      p.data[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    // Parameters live in 32-bit checkpoints; keep memory identical to disk.
    round_to_storage_precision(p);
  }
}

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip norm must be positive");
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double x : g.data) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (Tensor& g : grads)
      for (double& x : g.data) x *= s;
  }
  return norm;
}

double decayed_lr(std::size_t step, double lr0, double factor, std::size_t interval) {
  if (interval < 1) throw ConfigError("decay interval must be at least 1");
  return lr0 * std::pow(factor, static_cast<double>(step / interval));
}

MetricExtractor extractor_for(const std::vector<std::string>& names) {
  for (const std::string& n : names)
    if (n != "B4" && n != "C" && n != "M" && n != "R" && n != "XE")
      throw ConfigError("unknown selection metric '" + n + "'");
  return [names](const MetricReport& r, double validation_loss) {
    std::vector<double> out;
    out.reserve(names.size());
    for (const std::string& n : names) {
      if (n == "B4") out.push_back(r.b4);
      else if (n == "C") out.push_back(r.c);
      else if (n == "M") out.push_back(r.m);
      else if (n == "R") out.push_back(r.r);
      else out.push_back(-validation_loss);
    }
    return out;
  };
}

namespace {

std::string format_epoch_line(const EpochInfo& e, const char* decision) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << e.epoch << '\t' << (e.weighted_phase ? "professional" : "general") << '\t'
      << e.n << '\t' << e.train_loss << '\t' << std::setprecision(8) << e.lr
      << std::setprecision(6) << '\t' << e.report.b4 << '\t' << e.report.c << '\t'
      << e.report.m << '\t' << e.report.r << '\t' << e.overall << '\t' << decision
      << '\n';
  return out.str();
}

} // namespace

TrainResult run_training(const Dataset& dataset, const RunConfig& config,
                         MetricExtractor extractor) {
  const TrainConfig& cfg = config.train;
  validate(cfg);
  if (!extractor) extractor = extractor_for(config.metric_names);

  Dataset ds = dataset;
  if (ds.splits.train.empty()) throw ConfigError("training split is empty");
  if (ds.splits.validation.empty()) throw ConfigError("validation split is empty");

  TrainResult result;
  result.vocab = build_vocabulary(split_captions(ds, "train"));
  encode_dataset(ds, result.vocab);

  const std::vector<const VideoRecord*> train = ds.split("train");
  const std::vector<const VideoRecord*> val = ds.split("validation");

  double len_sum = 0.0;
  std::size_t len_count = 0;
  std::size_t max_avail = 1;
  for (const VideoRecord* rec : train) {
    max_avail = std::max(max_avail, rec->annotations.size());
    for (const std::vector<int>& ann : rec->annotations) {
      len_sum += static_cast<double>(ann.size() - 1); // excludes the end marker
      ++len_count;
    }
  }
  const double mean_len = len_sum / static_cast<double>(len_count);

  CellDims dims1{config.dims.n_x, config.dims.n_h, config.dims.n_f, ds.n_s, ds.n_v};
  DecoderParams params = init_decoder(result.vocab.size(), dims1, cfg.seed);
  std::vector<NamedParam> refs = param_refs(params);
  AdamState adam = init_adam(refs);
  const LnMode ln = cfg.use_layer_norm ? LnMode::active : LnMode::identity;

  SelectionState selection(config.metric_names, config.metric_weights);
  Rng base(cfg.seed);
  std::size_t global_step = 0;

  const bool persist = !config.out_dir.empty();
  std::filesystem::path out_dir(config.out_dir);
  if (persist) std::filesystem::create_directories(out_dir);
  const std::string champion_path = (out_dir / "champion.ckpt").string();

  std::ostringstream log;
  log << "epoch\tphase\tn\tloss\tlr\tb4\tc\tm\tr\toverall\tdecision\n";

  for (std::size_t epoch = 0; epoch < cfg.epoch_total; ++epoch) {
    const std::size_t n = sampling_size(epoch, cfg, max_avail);
    Rng order_rng = base.fork(2 * epoch);
    Rng draw_rng = base.fork(2 * epoch + 1);

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    order_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    double lr_used = decayed_lr(global_step, cfg.lr0, cfg.decay_factor, cfg.decay_interval);

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double bs = static_cast<double>(stop - start);

      Tape t;
      DecoderVars dv = attach_decoder(t, params, ln);
      std::vector<Var> pvars = decoder_param_vars(dv);

      Var total{};
      bool any = false;
      for (std::size_t b = start; b < stop; ++b) {
        const VideoRecord* rec = train[order[b]];
        std::vector<std::size_t> picks =
            sample_annotation_indices(rec->annotations.size(), n, draw_rng);

        std::vector<Var> ann_losses;
        std::vector<double> losses, lengths;
        for (std::size_t idx : picks) {
          const std::vector<int>& ann = rec->annotations[idx];
          DropoutMasks masks1 = cfg.use_variational_dropout
                                    ? sample_masks(cfg.keep, params.layer1.dims, draw_rng)
                                    : unit_masks(params.layer1.dims);
          DropoutMasks masks2 = cfg.use_variational_dropout
                                    ? sample_masks(cfg.keep, params.layer2.dims, draw_rng)
                                    : unit_masks(params.layer2.dims);
          MaskVars m1 = attach_masks(t, masks1);
          MaskVars m2 = attach_masks(t, masks2);
          std::vector<Var> dists =
              teacher_forced_vars(t, dv, rec->s, rec->v, ann, m1, m2);
          Var l = annotation_loss_vars(t, dists, ann, &result.clamp_warnings);
          ann_losses.push_back(l);
          losses.push_back(t.value(l)(0));
          lengths.push_back(static_cast<double>(ann.size() - 1));
          loss_sum += losses.back();
          ++loss_count;
        }

        // Weights come from loss values, not loss nodes: the weighting is
        // held constant during backpropagation.
        std::vector<double> beta =
            professional_weights(losses, lengths, mean_len, cfg.gamma);
        for (std::size_t a = 0; a < ann_losses.size(); ++a) {
          Var contrib = t.scale(ann_losses[a], beta[a] / bs);
          total = any ? t.add(total, contrib) : contrib;
          any = true;
        }
      }

      std::vector<Tensor> grads = t.gradients(total, pvars);
      clip_global_norm(grads, cfg.clip_norm);
      lr_used = decayed_lr(global_step, cfg.lr0, cfg.decay_factor, cfg.decay_interval);
      adam_step(refs, grads, adam, lr_used);
      ++global_step;
    }

    // Validation: teacher-forced loss plus greedy decoding metrics.
    double val_loss_sum = 0.0;
    std::size_t val_loss_count = 0;
    std::vector<Tokens> candidates;
    ReferenceSets references;
    for (const VideoRecord* rec : val) {
      for (const std::vector<int>& ann : rec->annotations) {
        val_loss_sum += annotation_loss(rec->s, rec->v, ann, params, ln);
        ++val_loss_count;
      }
      std::vector<int> ids = greedy_decode(rec->s, rec->v, params, cfg.max_decode_len, ln);
      Tokens cand;
      for (int id : ids) cand.push_back(result.vocab.token_of(id));
      candidates.push_back(std::move(cand));
      std::vector<Tokens> refs_for_video;
      for (const std::string& caption : rec->captions)
        refs_for_video.push_back(tokenize(caption));
      references.push_back(std::move(refs_for_video));
    }

    EpochInfo info;
    info.epoch = epoch;
    info.weighted_phase = epoch >= cfg.epoch_sw;
    info.n = n;
    info.train_loss = loss_sum / static_cast<double>(loss_count);
    info.validation_loss = val_loss_sum / static_cast<double>(val_loss_count);
    info.lr = lr_used;
    info.report = evaluate_corpus(candidates, references);

    const std::vector<double> values = extractor(info.report, info.validation_loss);
    const SelectionState::Decision decision = selection.observe(epoch, values);
    info.overall = decision.overall;
    info.saved = decision.save;
    if (decision.save) {
      result.champion = params;
      result.champion_epoch = epoch;
      if (persist) save_checkpoint(refs, champion_path);
    }
    const char* word = decision.rejected ? "reject" : (decision.save ? "save" : "skip");
    log << format_epoch_line(info, word);
    result.epochs.push_back(std::move(info));
  }

  result.params = std::move(params);
  result.log = log.str();
  result.history_tsv = selection.history_tsv();

  if (persist) {
    write_vocabulary(result.vocab, (out_dir / "vocab.tsv").string());
    std::ofstream log_file(out_dir / "train.log", std::ios::binary | std::ios::trunc);
    log_file << result.log;
    std::ofstream hist_file(out_dir / "selection.tsv", std::ios::binary | std::ios::trunc);
    hist_file << result.history_tsv;
  }
  return result;
}

} // namespace vnsgru
