// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: train / eval / caption / gen-data. One JSON config
// file drives everything; flags override individual fields. Logs go to
// stderr, artifacts to files, single-value answers to stdout.

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "vnsgru/checkpoint.hpp"
#include "vnsgru/data.hpp"
#include "vnsgru/errors.hpp"
#include "vnsgru/metrics.hpp"
#include "vnsgru/training.hpp"

namespace fs = std::filesystem;
using vnsgru::ConfigError;
using vnsgru::FormatError;
using ojson = nlohmann::ordered_json;

namespace {

struct CliOptions {
  std::string config_path;
  std::string checkpoint;
  std::string vocab_path;
  std::string features_path; // caption: single-record blob
  std::string out;
  std::string split = "test";
  long long seed = -1; // <0 keeps the config value
  std::size_t beam = 0;
  std::size_t threads = 1;
  // gen-data overrides
  long long videos = -1;
  long long themes = -1;
  double noise = -1.0;
};

ojson parse_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("config '" + path + "': cannot open");
  try {
    return ojson::parse(f);
  } catch (const ojson::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

// Typed field access with config-flavored errors; absent keys keep defaults.
template <class T>
void read_field(const ojson& j, const char* key, T& out, const char* where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const ojson::exception&) {
    throw ConfigError(std::string("config: '") + where + "." + key + "' has the wrong type");
  }
}

vnsgru::ScheduleKind schedule_from_name(const std::string& name) {
  if (name == "fixed") return vnsgru::ScheduleKind::fixed;
  if (name == "exponential_absolute") return vnsgru::ScheduleKind::exponential_absolute;
  if (name == "exponential_relative") return vnsgru::ScheduleKind::exponential_relative;
  throw ConfigError("config: unknown schedule '" + name + "'");
}

struct FullConfig {
  std::string manifest;
  std::string features;
  vnsgru::RunConfig run;
  vnsgru::SyntheticSpec synthetic;
  std::size_t beam = 0;
};

FullConfig load_config(const std::string& path) {
  FullConfig c;
  if (path.empty()) return c;
  const ojson doc = parse_config_file(path);
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");

  if (auto it = doc.find("dataset"); it != doc.end()) {
    read_field(*it, "manifest", c.manifest, "dataset");
    read_field(*it, "features", c.features, "dataset");
  }
  if (auto it = doc.find("model"); it != doc.end()) {
    read_field(*it, "n_x", c.run.dims.n_x, "model");
    read_field(*it, "n_h", c.run.dims.n_h, "model");
    read_field(*it, "n_f", c.run.dims.n_f, "model");
  }
  if (auto it = doc.find("train"); it != doc.end()) {
    vnsgru::TrainConfig& t = c.run.train;
    read_field(*it, "epoch_total", t.epoch_total, "train");
    read_field(*it, "epoch_sw", t.epoch_sw, "train");
    read_field(*it, "gamma", t.gamma, "train");
    std::string schedule;
    read_field(*it, "schedule", schedule, "train");
    if (!schedule.empty()) t.schedule = schedule_from_name(schedule);
    read_field(*it, "fixed_n", t.fixed_n, "train");
    read_field(*it, "sigma", t.sigma, "train");
    read_field(*it, "exp_base", t.exp_base, "train");
    read_field(*it, "batch_size", t.batch_size, "train");
    read_field(*it, "lr0", t.lr0, "train");
    read_field(*it, "decay_factor", t.decay_factor, "train");
    read_field(*it, "decay_interval", t.decay_interval, "train");
    read_field(*it, "clip_norm", t.clip_norm, "train");
    if (auto k = it->find("keep"); k != it->end()) {
      read_field(*k, "x", t.keep.x, "train.keep");
      read_field(*k, "h", t.keep.h, "train.keep");
      read_field(*k, "v", t.keep.v, "train.keep");
      read_field(*k, "s", t.keep.s, "train.keep");
    }
    read_field(*it, "use_variational_dropout", t.use_variational_dropout, "train");
    read_field(*it, "use_layer_norm", t.use_layer_norm, "train");
    read_field(*it, "max_decode_len", t.max_decode_len, "train");
    read_field(*it, "seed", t.seed, "train");
  }
  if (auto it = doc.find("selection"); it != doc.end()) {
    read_field(*it, "metrics", c.run.metric_names, "selection");
    read_field(*it, "weights", c.run.metric_weights, "selection");
  }
  if (auto it = doc.find("synthetic"); it != doc.end()) {
    vnsgru::SyntheticSpec& s = c.synthetic;
    read_field(*it, "name", s.name, "synthetic");
    read_field(*it, "videos", s.videos, "synthetic");
    read_field(*it, "themes", s.themes, "synthetic");
    read_field(*it, "n_v", s.n_v, "synthetic");
    read_field(*it, "n_s", s.n_s, "synthetic");
    read_field(*it, "annotations_per_video", s.annotations_per_video, "synthetic");
    read_field(*it, "noise", s.noise, "synthetic");
  }
  read_field(doc, "out_dir", c.run.out_dir, "");
  read_field(doc, "beam", c.beam, "");
  return c;
}

vnsgru::Dataset load_config_dataset(const FullConfig& c) {
  if (c.manifest.empty() || c.features.empty())
    throw ConfigError("config: dataset.manifest and dataset.features are required");
  return vnsgru::load_dataset(c.manifest, c.features);
}

std::string report_json(const vnsgru::MetricReport& r) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "{\"b4\": " << r.b4 << ", \"c\": " << r.c << ", \"m\": " << r.m
      << ", \"r\": " << r.r << ", \"captions\": " << r.captions << "}";
  return out.str();
}

vnsgru::Vocabulary load_vocab_near(const CliOptions& opt) {
  std::string path = opt.vocab_path;
  if (path.empty())
    path = (fs::path(opt.checkpoint).parent_path() / "vocab.tsv").string();
  return vnsgru::read_vocabulary(path);
}

int cmd_train(const CliOptions& opt) {
  FullConfig c = load_config(opt.config_path);
  if (opt.seed >= 0) c.run.train.seed = static_cast<std::uint64_t>(opt.seed);
  if (!opt.out.empty()) c.run.out_dir = opt.out;
  if (c.run.out_dir.empty()) throw ConfigError("config: out_dir is required for train");

  const vnsgru::Dataset ds = load_config_dataset(c);
  vnsgru::TrainResult result = vnsgru::run_training(ds, c.run);

  std::cerr << result.log;
  if (result.clamp_warnings > 0)
    std::cerr << "warning: " << result.clamp_warnings
              << " gold-token probabilities clamped at the loss floor\n";

  std::ostringstream answer;
  answer.precision(6);
  answer << std::fixed;
  answer << "{\"champion_epoch\": " << result.champion_epoch << ", \"epochs\": "
         << result.epochs.size() << ", \"final_train_loss\": "
         << result.epochs.back().train_loss << "}";
  std::cout << answer.str() << "\n";
  return 0;
}

int cmd_eval(const CliOptions& opt) {
  FullConfig c = load_config(opt.config_path);
  if (opt.checkpoint.empty()) throw ConfigError("eval: --checkpoint is required");
  const vnsgru::Dataset raw = load_config_dataset(c);

  vnsgru::DecoderParams params = vnsgru::load_decoder(opt.checkpoint);
  if (params.layer1.dims.n_v != raw.n_v || params.layer1.dims.n_s != raw.n_s)
    throw ConfigError("checkpoint expects n_v=" + std::to_string(params.layer1.dims.n_v) +
                      ", n_s=" + std::to_string(params.layer1.dims.n_s) +
                      " but the manifest has n_v=" + std::to_string(raw.n_v) +
                      ", n_s=" + std::to_string(raw.n_s));
  vnsgru::Vocabulary vocab = load_vocab_near(opt);
  if (vocab.size() != params.vocab_size())
    throw ConfigError("vocabulary has " + std::to_string(vocab.size()) +
                      " entries but the checkpoint embeds " +
                      std::to_string(params.vocab_size()));

  const vnsgru::LnMode ln = c.run.train.use_layer_norm ? vnsgru::LnMode::active
                                                       : vnsgru::LnMode::identity;
  const std::size_t beam = opt.beam > 0 ? opt.beam : c.beam;
  const std::size_t max_len = c.run.train.max_decode_len;

  std::vector<const vnsgru::VideoRecord*> records = raw.split(opt.split);
  if (records.empty()) throw ConfigError("split '" + opt.split + "' is empty");

#ifdef _OPENMP
  omp_set_num_threads(static_cast<int>(std::max<std::size_t>(1, opt.threads)));
#endif

  std::vector<std::vector<int>> decoded(records.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long i = 0; i < static_cast<long long>(records.size()); ++i) {
    const vnsgru::VideoRecord* rec = records[static_cast<std::size_t>(i)];
    decoded[static_cast<std::size_t>(i)] =
        beam > 1 ? vnsgru::beam_decode(rec->s, rec->v, params, max_len, beam, ln)
                 : vnsgru::greedy_decode(rec->s, rec->v, params, max_len, ln);
  }

  std::vector<vnsgru::Tokens> candidates;
  vnsgru::ReferenceSets references;
  std::vector<std::pair<std::string, std::string>> caption_rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    vnsgru::Tokens cand;
    for (int id : decoded[i]) cand.push_back(vocab.token_of(id));
    caption_rows.emplace_back(records[i]->id, vnsgru::join_tokens(cand));
    candidates.push_back(std::move(cand));
    std::vector<vnsgru::Tokens> refs;
    for (const std::string& caption : records[i]->captions)
      refs.push_back(vnsgru::tokenize(caption));
    references.push_back(std::move(refs));
  }
  std::sort(caption_rows.begin(), caption_rows.end());

  const vnsgru::MetricReport report = vnsgru::evaluate_corpus(candidates, references);
  const std::string out_dir = opt.out.empty() ? (c.run.out_dir.empty() ? "." : c.run.out_dir)
                                              : opt.out;
  fs::create_directories(out_dir);
  vnsgru::write_caption_file((fs::path(out_dir) / ("captions_" + opt.split + ".tsv")).string(),
                             caption_rows);
  const std::string json = report_json(report);
  std::ofstream rf(fs::path(out_dir) / ("report_" + opt.split + ".json"),
                   std::ios::binary | std::ios::trunc);
  rf << json << "\n";
  std::cout << json << "\n";
  return 0;
}

int cmd_caption(const CliOptions& opt) {
  FullConfig c = load_config(opt.config_path);
  if (opt.checkpoint.empty()) throw ConfigError("caption: --checkpoint is required");
  if (opt.features_path.empty()) throw ConfigError("caption: --features is required");

  vnsgru::DecoderParams params = vnsgru::load_decoder(opt.checkpoint);
  vnsgru::Vocabulary vocab = load_vocab_near(opt);
  if (vocab.size() != params.vocab_size())
    throw ConfigError("vocabulary has " + std::to_string(vocab.size()) +
                      " entries but the checkpoint embeds " +
                      std::to_string(params.vocab_size()));

  const std::size_t n_v = params.layer1.dims.n_v;
  const std::size_t n_s = params.layer1.dims.n_s;
  std::ifstream f(opt.features_path, std::ios::binary);
  if (!f) throw FormatError("feature file '" + opt.features_path + "': cannot open");
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string blob = ss.str();
  const std::size_t expected = (n_v + n_s) * 4;
  if (blob.size() != expected)
    throw FormatError("feature file '" + opt.features_path + "': expected " +
                      std::to_string(expected) + " bytes for one record, got " +
                      std::to_string(blob.size()));

  auto read_f32 = [&blob](std::size_t idx) {
    std::uint32_t u = 0;
    for (int b = 3; b >= 0; --b)
      u = (u << 8) | static_cast<unsigned char>(blob[idx * 4 + static_cast<std::size_t>(b)]);
    float v;
    std::memcpy(&v, &u, 4);
    return static_cast<double>(v);
  };
  vnsgru::Tensor v = vnsgru::Tensor::zeros({n_v});
  for (std::size_t j = 0; j < n_v; ++j) v(j) = read_f32(j);
  vnsgru::Tensor s = vnsgru::Tensor::zeros({n_s});
  for (std::size_t j = 0; j < n_s; ++j) s(j) = read_f32(n_v + j);

  const vnsgru::LnMode ln = c.run.train.use_layer_norm ? vnsgru::LnMode::active
                                                       : vnsgru::LnMode::identity;
  const std::size_t beam = opt.beam > 0 ? opt.beam : c.beam;
  const std::size_t max_len = c.run.train.max_decode_len;
  const std::vector<int> ids =
      beam > 1 ? vnsgru::beam_decode(s, v, params, max_len, beam, ln)
               : vnsgru::greedy_decode(s, v, params, max_len, ln);
  std::cout << vnsgru::decode_tokens(vocab, ids) << "\n";
  return 0;
}

int cmd_gen_data(const CliOptions& opt) {
  FullConfig c = load_config(opt.config_path);
  vnsgru::SyntheticSpec spec = c.synthetic;
  if (opt.videos >= 0) spec.videos = static_cast<std::size_t>(opt.videos);
  if (opt.themes >= 0) spec.themes = static_cast<std::size_t>(opt.themes);
  if (opt.noise >= 0.0) spec.noise = opt.noise;
  const std::uint64_t seed = opt.seed >= 0 ? static_cast<std::uint64_t>(opt.seed)
                                           : c.run.train.seed;
  if (opt.out.empty()) throw ConfigError("gen-data: --out directory is required");

  const vnsgru::Dataset ds = vnsgru::generate_synthetic_dataset(spec, seed);
  std::error_code ec;
  fs::create_directories(opt.out, ec);
  const std::string manifest = (fs::path(opt.out) / "manifest.json").string();
  const std::string features = (fs::path(opt.out) / "features.bin").string();
  vnsgru::write_dataset(ds, manifest, features);
  std::cout << manifest << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequence-decoder training toolkit for video captioning at desk scale"};
  app.require_subcommand(1);
  CliOptions opt;

  CLI::App* train = app.add_subcommand("train", "Train a model and select a champion");
  train->add_option("--config", opt.config_path, "JSON config file")->required();
  train->add_option("--seed", opt.seed, "Override the config seed");
  train->add_option("--out", opt.out, "Override the output directory");

  CLI::App* eval = app.add_subcommand("eval", "Decode a split and score it");
  eval->add_option("--config", opt.config_path, "JSON config file")->required();
  eval->add_option("--checkpoint", opt.checkpoint, "Model checkpoint")->required();
  eval->add_option("--vocab", opt.vocab_path, "Vocabulary file (default: next to checkpoint)");
  eval->add_option("--split", opt.split, "train|validation|test");
  eval->add_option("--beam", opt.beam, "Beam width (default greedy)");
  eval->add_option("--threads", opt.threads, "Worker threads for decoding");
  eval->add_option("--out", opt.out, "Output directory for captions and report");

  CLI::App* caption = app.add_subcommand("caption", "Caption one video's features");
  caption->add_option("--config", opt.config_path, "JSON config file");
  caption->add_option("--checkpoint", opt.checkpoint, "Model checkpoint")->required();
  caption->add_option("--vocab", opt.vocab_path, "Vocabulary file (default: next to checkpoint)");
  caption->add_option("--features", opt.features_path, "Single-record feature blob")->required();
  caption->add_option("--beam", opt.beam, "Beam width (default greedy)");

  CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--config", opt.config_path, "JSON config file with a 'synthetic' section");
  gen->add_option("--videos", opt.videos, "Number of videos");
  gen->add_option("--themes", opt.themes, "Number of caption themes");
  gen->add_option("--noise", opt.noise, "Feature noise in [0, 1]");
  gen->add_option("--seed", opt.seed, "Generator seed");
  gen->add_option("--out", opt.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return cmd_train(opt);
    if (eval->parsed()) return cmd_eval(opt);
    if (caption->parsed()) return cmd_caption(opt);
    if (gen->parsed()) return cmd_gen_data(opt);
    return 2;
  } catch (const vnsgru::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const vnsgru::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const vnsgru::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const vnsgru::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
