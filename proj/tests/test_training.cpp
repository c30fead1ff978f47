// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "vnsgru/checkpoint.hpp"
#include "vnsgru/training.hpp"

#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace vnsgru;

namespace {

Tensor dist(std::vector<double> probs) { return Tensor::vec(std::move(probs)); }

Dataset tiny_dataset(std::uint64_t seed = 11) {
  SyntheticSpec spec;
  spec.videos = 12; // 8 train, 2 validation, 2 test
  spec.themes = 2;
  spec.n_v = 8;
  spec.n_s = 8;
  spec.annotations_per_video = 3;
  return generate_synthetic_dataset(spec, seed);
}

RunConfig tiny_config() {
  RunConfig rc;
  rc.train.epoch_total = 4;
  rc.train.epoch_sw = 2;
  rc.train.schedule = ScheduleKind::fixed;
  rc.train.fixed_n = 3;
  rc.train.batch_size = 2;
  rc.train.lr0 = 5e-3;
  rc.train.max_decode_len = 8;
  rc.train.seed = 5;
  return rc;
}

bool same_params(DecoderParams& a, DecoderParams& b) {
  auto ra = param_refs(a), rb = param_refs(b);
  if (ra.size() != rb.size()) return false;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (ra[i].tensor->shape != rb[i].tensor->shape) return false;
    if (ra[i].tensor->data != rb[i].tensor->data) return false;
  }
  return true;
}

} // namespace

TEST_CASE("config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  auto expect_reject = [](auto mutate) {
    TrainConfig bad;
    mutate(bad);
    CHECK_THROWS_AS(validate(bad), ConfigError);
  };
  expect_reject([](TrainConfig& c) { c.epoch_total = 0; });
  expect_reject([](TrainConfig& c) { c.epoch_sw = c.epoch_total + 1; });
  expect_reject([](TrainConfig& c) { c.gamma = 1.5; });
  expect_reject([](TrainConfig& c) { c.gamma = -0.1; });
  expect_reject([](TrainConfig& c) { c.fixed_n = 0; });
  expect_reject([](TrainConfig& c) { c.sigma = 0; });
  expect_reject([](TrainConfig& c) { c.exp_base = 0.5; });
  expect_reject([](TrainConfig& c) { c.batch_size = 0; });
  expect_reject([](TrainConfig& c) { c.lr0 = 0.0; });
  expect_reject([](TrainConfig& c) { c.decay_interval = 0; });
  expect_reject([](TrainConfig& c) { c.clip_norm = -1.0; });
  expect_reject([](TrainConfig& c) { c.keep.h = 0.0; });
  expect_reject([](TrainConfig& c) { c.keep.x = 1.2; });
  expect_reject([](TrainConfig& c) { c.max_decode_len = 0; });
}

TEST_CASE("per-annotation loss") {
  SUBCASE("perfect predictions cost nothing") {
    std::vector<Tensor> dists{dist({0, 1, 0, 0}), dist({0, 0, 0, 1})};
    CHECK(per_annotation_loss(dists, {1, 3}) == 0.0);
  }

  SUBCASE("uniform predictions cost log vocab") {
    std::vector<Tensor> dists{dist({0.25, 0.25, 0.25, 0.25}),
                              dist({0.25, 0.25, 0.25, 0.25})};
    CHECK(per_annotation_loss(dists, {0, 2}) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }

  SUBCASE("hand-set two-step case") {
    std::vector<Tensor> dists{dist({0.5, 0.5}), dist({0.75, 0.25})};
    const double expected = -(std::log(0.5) + std::log(0.25)) / 2.0;
    CHECK(per_annotation_loss(dists, {0, 1}) ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  SUBCASE("zero probability clamps and counts a warning") {
    std::vector<Tensor> dists{dist({1.0, 0.0})};
    std::size_t warnings = 0;
    const double loss = per_annotation_loss(dists, {1}, &warnings);
    CHECK(warnings == 1);
    CHECK(loss == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
  }

  SUBCASE("misalignment and bad ids are rejected") {
    std::vector<Tensor> dists{dist({0.5, 0.5})};
    CHECK_THROWS_AS(per_annotation_loss(dists, {0, 1}), DimensionError);
    CHECK_THROWS_AS(per_annotation_loss(dists, {7}), DomainError);
  }

  SUBCASE("tape version agrees with the eager version") {
    Rng rng(3);
    for (int trial = 0; trial < 5; ++trial) {
      INFO("trial ", trial);
      const std::vector<int> ann{2, 0, 4};
      Tape t;
      std::vector<Var> dist_vars;
      std::vector<Tensor> dist_vals;
      for (std::size_t step = 0; step < ann.size(); ++step) {
        Var logits = t.leaf(oracle::rand_vec(5, rng, -2.0, 2.0));
        Var d = t.softmax(logits);
        dist_vars.push_back(d);
        dist_vals.push_back(t.value(d));
      }
      std::size_t warn_tape = 0, warn_eager = 0;
      Var loss = annotation_loss_vars(t, dist_vars, ann, &warn_tape);
      CHECK(t.value(loss)(0) ==
            doctest::Approx(per_annotation_loss(dist_vals, ann, &warn_eager))
                .epsilon(1e-12));
      CHECK(warn_tape == warn_eager);
    }
  }

  SUBCASE("gradients of the tape loss check out") {
    const std::vector<int> ann{2, 0};
    Rng rng(9);
    std::vector<Tensor> inputs{oracle::rand_vec(5, rng, -1.0, 1.0),
                               oracle::rand_vec(5, rng, -1.0, 1.0)};
    const double worst = oracle::check_grads(inputs, [&](Tape& t,
                                                         const std::vector<Var>& leaves) {
      std::vector<Var> dists;
      for (Var l : leaves) dists.push_back(t.softmax(l));
      return annotation_loss_vars(t, dists, ann);
    });
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("professional weights") {
  SUBCASE("single annotation gets full weight") {
    CHECK(professional_weights({3.2}, {5.0}, 6.0, 0.8) == std::vector<double>{1.0});
  }

  SUBCASE("worked two-annotation example") {
    auto beta = professional_weights({1.0, 2.0}, {5.0, 7.0}, 6.0, 0.5);
    REQUIRE(beta.size() == 2);
    CHECK(beta[0] == doctest::Approx(0.61553).epsilon(1e-5));
    CHECK(beta[1] == doctest::Approx(0.38447).epsilon(1e-5));
  }

  SUBCASE("weights are positive and sum to one") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 1 + rng.uniform_index(8);
      std::vector<double> losses, lengths;
      for (std::size_t i = 0; i < n; ++i) {
        losses.push_back(rng.uniform(0.0, 8.0));
        lengths.push_back(1.0 + static_cast<double>(rng.uniform_index(12)));
      }
      const double gamma = rng.uniform(0.0, 1.0);
      auto beta = professional_weights(losses, lengths, 6.0, gamma);
      double total = 0.0;
      for (double b : beta) {
        CHECK(b > 0.0);
        total += b;
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }

  SUBCASE("at equal lengths, lower loss means higher weight") {
    auto beta = professional_weights({1.0, 2.0, 0.5}, {5.0, 5.0, 5.0}, 5.0, 0.7);
    CHECK(beta[2] > beta[0]);
    CHECK(beta[0] > beta[1]);
  }

  SUBCASE("gamma zero ignores the losses") {
    auto a = professional_weights({1.0, 9.0}, {4.0, 6.0}, 5.0, 0.0);
    auto b = professional_weights({8.0, 0.5}, {4.0, 6.0}, 5.0, 0.0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }

  SUBCASE("gamma one ignores the lengths") {
    auto a = professional_weights({1.0, 2.0}, {3.0, 9.0}, 5.0, 1.0);
    auto b = professional_weights({1.0, 2.0}, {9.0, 3.0}, 7.0, 1.0);
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }

  SUBCASE("closer to the mean length means higher weight when gamma is zero") {
    auto beta = professional_weights({0.0, 0.0}, {6.1, 2.0}, 6.0, 0.0);
    CHECK(beta[0] > beta[1]);
  }

  SUBCASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(professional_weights({}, {}, 5.0, 0.5), DomainError);
    CHECK_THROWS_AS(professional_weights({1.0}, {1.0, 2.0}, 5.0, 0.5), DimensionError);
    CHECK_THROWS_AS(professional_weights({1.0}, {1.0}, 5.0, 1.5), ConfigError);
    CHECK_THROWS_AS(professional_weights({1.0}, {1.0}, 5.0, -0.5), ConfigError);
  }
}

TEST_CASE("weighted batch loss") {
  SUBCASE("uniform weights give the plain mean") {
    ProfessionalBatch batch;
    batch.videos.push_back({{}, {}, {2.0, 4.0}, {0.5, 0.5}});
    CHECK(weighted_batch_loss(batch) == doctest::Approx(3.0).epsilon(1e-12));
  }

  SUBCASE("hand-set mixed batch") {
    ProfessionalBatch batch;
    batch.videos.push_back({{}, {}, {2.0, 4.0}, {0.7, 0.3}});
    batch.videos.push_back({{}, {}, {3.0}, {1.0}});
    CHECK(weighted_batch_loss(batch) == doctest::Approx(2.8).epsilon(1e-12));
  }

  SUBCASE("zero losses cost nothing") {
    ProfessionalBatch batch;
    batch.videos.push_back({{}, {}, {0.0, 0.0}, {0.4, 0.6}});
    CHECK(weighted_batch_loss(batch) == 0.0);
  }

  SUBCASE("misaligned weights are rejected") {
    ProfessionalBatch batch;
    batch.videos.push_back({{}, {}, {1.0, 2.0}, {1.0}});
    CHECK_THROWS_AS(weighted_batch_loss(batch), DimensionError);
    ProfessionalBatch empty;
    CHECK_THROWS_AS(weighted_batch_loss(empty), DomainError);
  }
}

TEST_CASE("sampling schedules") {
  TrainConfig cfg; // epoch_sw 16, absolute doubling, sigma 16

  SUBCASE("uniform phase always samples one annotation") {
    for (std::size_t e : {0ul, 1ul, 7ul, 15ul}) CHECK(sampling_size(e, cfg, 100) == 1);
  }

  SUBCASE("absolute exponential doubles every sigma epochs") {
    CHECK(sampling_size(16, cfg, 100) == 2);
    CHECK(sampling_size(31, cfg, 100) == 2);
    CHECK(sampling_size(32, cfg, 100) == 4);
    CHECK(sampling_size(48, cfg, 100) == 8);
    CHECK(sampling_size(64, cfg, 100) == 16);
    CHECK(sampling_size(79, cfg, 100) == 16);
    CHECK(sampling_size(80, cfg, 100) == 32);
  }

  SUBCASE("never exceeds the available annotations") {
    CHECK(sampling_size(64, cfg, 10) == 10);
    CHECK(sampling_size(0, cfg, 1) == 1);
    CHECK_THROWS_AS(sampling_size(0, cfg, 0), ConfigError);
  }

  SUBCASE("fixed schedule") {
    cfg.schedule = ScheduleKind::fixed;
    cfg.fixed_n = 7;
    CHECK(sampling_size(15, cfg, 100) == 1);
    CHECK(sampling_size(16, cfg, 100) == 7);
    CHECK(sampling_size(40, cfg, 5) == 5);
  }

  SUBCASE("relative exponential grows from the switch epoch") {
    cfg.schedule = ScheduleKind::exponential_relative;
    cfg.epoch_sw = 10;
    cfg.sigma = 4;
    cfg.exp_base = 2.0;
    CHECK(sampling_size(10, cfg, 100) == 1);
    CHECK(sampling_size(13, cfg, 100) == 1);
    CHECK(sampling_size(14, cfg, 100) == 2);
    CHECK(sampling_size(18, cfg, 100) == 4);
    CHECK(sampling_size(22, cfg, 100) == 8);
    cfg.exp_base = 3.0;
    CHECK(sampling_size(14, cfg, 100) == 3);
    CHECK(sampling_size(18, cfg, 100) == 9);
  }
}

TEST_CASE("adam optimizer") {
  SUBCASE("state is shaped like the parameters") {
    DecoderParams p = init_decoder(7, CellDims{5, 6, 3, 4, 5}, 2);
    auto refs = param_refs(p);
    AdamState st = init_adam(refs);
    REQUIRE(st.m.size() == refs.size());
    REQUIRE(st.v.size() == refs.size());
    CHECK(st.step == 0);
    for (std::size_t i = 0; i < refs.size(); ++i) {
      CHECK(st.m[i].shape == refs[i].tensor->shape);
      for (double x : st.v[i].data) CHECK(x == 0.0);
    }
  }

  SUBCASE("zero gradients leave parameters untouched") {
    Tensor w = Tensor::vec({1.0, -2.0, 0.5});
    std::vector<NamedParam> params{{"w", &w}};
    AdamState st = init_adam(params);
    const std::vector<double> before = w.data;
    adam_step(params, {Tensor::zeros({3})}, st, 0.01);
    CHECK(w.data == before);
    CHECK(st.step == 1);
  }

  SUBCASE("first step moves by almost exactly the learning rate") {
    Tensor w = Tensor::vec({1.0});
    std::vector<NamedParam> params{{"w", &w}};
    AdamState st = init_adam(params);
    adam_step(params, {Tensor::vec({1.0})}, st, 0.01);
    CHECK(w(0) == doctest::Approx(0.99).epsilon(1e-6));
    adam_step(params, {Tensor::vec({-1.0})}, st, 0.01);
    CHECK(w(0) > 0.99); // direction follows the sign of the gradient
  }

  SUBCASE("parameters stay at storage precision after every step") {
    Rng rng(5);
    Tensor w = oracle::rand_mat(4, 4, rng);
    round_to_storage_precision(w);
    std::vector<NamedParam> params{{"w", &w}};
    AdamState st = init_adam(params);
    for (int i = 0; i < 3; ++i) {
      adam_step(params, {oracle::rand_mat(4, 4, rng)}, st, 0.003);
      for (double x : w.data)
        CHECK(static_cast<double>(static_cast<float>(x)) == x);
    }
  }

  SUBCASE("repeating the same schedule is bit-deterministic") {
    auto run = [](std::vector<double>& out) {
      Rng rng(8);
      Tensor w = oracle::rand_vec(6, rng);
      round_to_storage_precision(w);
      std::vector<NamedParam> params{{"w", &w}};
      AdamState st = init_adam(params);
      for (int i = 0; i < 5; ++i) adam_step(params, {oracle::rand_vec(6, rng)}, st, 0.01);
      out = w.data;
    };
    std::vector<double> a, b;
    run(a);
    run(b);
    CHECK(a == b);
  }

  SUBCASE("non-finite gradients name the offending parameter") {
    Tensor w = Tensor::vec({1.0});
    std::vector<NamedParam> params{{"proj_bias", &w}};
    AdamState st = init_adam(params);
    Tensor g = Tensor::vec({std::numeric_limits<double>::quiet_NaN()});
    try {
      adam_step(params, {g}, st, 0.01);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("proj_bias") != std::string::npos);
    }
  }

  SUBCASE("shape and count mismatches are rejected") {
    Tensor w = Tensor::vec({1.0, 2.0});
    std::vector<NamedParam> params{{"w", &w}};
    AdamState st = init_adam(params);
    CHECK_THROWS_AS(adam_step(params, {Tensor::zeros({3})}, st, 0.01), DimensionError);
    CHECK_THROWS_AS(adam_step(params, {}, st, 0.01), DimensionError);
  }
}

TEST_CASE("gradient clipping") {
  SUBCASE("small gradients pass through and report their norm") {
    std::vector<Tensor> grads{Tensor::vec({3.0, 4.0})};
    CHECK(clip_global_norm(grads, 40.0) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(grads[0].data == std::vector<double>{3.0, 4.0});
  }

  SUBCASE("large gradients are rescaled to the cap, direction intact") {
    std::vector<Tensor> grads{Tensor::vec({30.0}), Tensor::vec({40.0})};
    const double pre = clip_global_norm(grads, 40.0);
    CHECK(pre == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(grads[0](0) == doctest::Approx(24.0).epsilon(1e-9));
    CHECK(grads[1](0) == doctest::Approx(32.0).epsilon(1e-9));
    const double post = std::sqrt(grads[0](0) * grads[0](0) + grads[1](0) * grads[1](0));
    CHECK(post == doctest::Approx(40.0).epsilon(1e-9));
  }

  SUBCASE("post-clip norm never exceeds the cap over random draws") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Tensor> grads{oracle::rand_vec(9, rng, -20.0, 20.0),
                                oracle::rand_mat(3, 5, rng, -20.0, 20.0)};
      double sq = 0.0;
      for (const Tensor& g : grads)
        for (double x : g.data) sq += x * x;
      const double norm = std::sqrt(sq);
      std::vector<Tensor> copy = grads;
      const double pre = clip_global_norm(copy, 25.0);
      CHECK(pre == doctest::Approx(norm).epsilon(1e-12));
      double sq_post = 0.0;
      for (const Tensor& g : copy)
        for (double x : g.data) sq_post += x * x;
      CHECK(std::sqrt(sq_post) <= std::min(norm, 25.0) + 1e-9);
    }
  }

  SUBCASE("a non-positive cap is rejected") {
    std::vector<Tensor> grads{Tensor::vec({1.0})};
    CHECK_THROWS_AS(clip_global_norm(grads, 0.0), ConfigError);
  }
}

TEST_CASE("staircase learning rate decay") {
  CHECK(decayed_lr(0, 2e-4, 0.861, 1000) == doctest::Approx(2e-4).epsilon(1e-15));
  CHECK(decayed_lr(999, 2e-4, 0.861, 1000) == doctest::Approx(2e-4).epsilon(1e-15));
  CHECK(decayed_lr(1000, 2e-4, 0.861, 1000) == doctest::Approx(1.722e-4).epsilon(1e-12));
  CHECK(decayed_lr(2500, 2e-4, 0.861, 1000) ==
        doctest::Approx(2e-4 * 0.861 * 0.861).epsilon(1e-12));
  CHECK_THROWS_AS(decayed_lr(0, 2e-4, 0.861, 0), ConfigError);
}

TEST_CASE("metric extractors") {
  MetricReport rep;
  rep.b4 = 61.0;
  rep.c = 103.0;
  rep.m = 38.0;
  rep.r = 78.0;

  auto full = extractor_for({"B4", "C", "M", "R"});
  CHECK(full(rep, 2.5) == std::vector<double>{61.0, 103.0, 38.0, 78.0});

  auto xe = extractor_for({"XE"});
  CHECK(xe(rep, 2.5) == std::vector<double>{-2.5});

  auto mixed = extractor_for({"R", "B4"});
  CHECK(mixed(rep, 0.0) == std::vector<double>{78.0, 61.0});

  CHECK_THROWS_AS(extractor_for({"BLEU"}), ConfigError);
}

TEST_CASE("training loop") {
  const Dataset ds = tiny_dataset();

  SUBCASE("runs, logs and selects deterministically") {
    RunConfig rc = tiny_config();
    TrainResult a = run_training(ds, rc);
    REQUIRE(a.epochs.size() == 4);

    // phases and sampling follow the schedule
    CHECK_FALSE(a.epochs[0].weighted_phase);
    CHECK_FALSE(a.epochs[1].weighted_phase);
    CHECK(a.epochs[2].weighted_phase);
    CHECK(a.epochs[3].weighted_phase);
    CHECK(a.epochs[0].n == 1);
    CHECK(a.epochs[2].n == 3);

    // losses and reports are finite and sane
    for (const EpochInfo& e : a.epochs) {
      CHECK(std::isfinite(e.train_loss));
      CHECK(std::isfinite(e.validation_loss));
      CHECK(e.report.captions == 2);
      CHECK(e.report.b4 >= 0.0);
      CHECK(e.report.b4 <= 100.0);
    }
    CHECK(a.clamp_warnings == 0);
    CHECK(a.champion_epoch < 4);
    CHECK(a.log.find("epoch\tphase\tn\tloss") == 0);
    CHECK(std::count(a.log.begin(), a.log.end(), '\n') == 5);
    CHECK_FALSE(a.history_tsv.empty());

    TrainResult b = run_training(ds, rc);
    CHECK(a.log == b.log);
    CHECK(a.history_tsv == b.history_tsv);
    CHECK(same_params(a.champion, b.champion));
    CHECK(same_params(a.params, b.params));
  }

  SUBCASE("loss improves from the first epoch to the last") {
    RunConfig rc = tiny_config();
    rc.train.epoch_total = 5;
    rc.train.epoch_sw = 5; // uniform phase only, cleanest signal
    TrainResult r = run_training(ds, rc);
    CHECK(r.epochs.back().train_loss < r.epochs.front().train_loss);
  }

  SUBCASE("single-annotation weighted phase equals the uniform phase") {
    RunConfig uniform = tiny_config();
    uniform.train.epoch_total = 3;
    uniform.train.epoch_sw = 3; // never switches

    RunConfig weighted = tiny_config();
    weighted.train.epoch_total = 3;
    weighted.train.epoch_sw = 0; // weighted from the start
    weighted.train.schedule = ScheduleKind::fixed;
    weighted.train.fixed_n = 1; // but with a single annotation per video

    TrainResult a = run_training(ds, uniform);
    TrainResult b = run_training(ds, weighted);
    REQUIRE(a.epochs.size() == b.epochs.size());
    for (std::size_t e = 0; e < a.epochs.size(); ++e) {
      CHECK(a.epochs[e].train_loss == b.epochs[e].train_loss);
      CHECK(a.epochs[e].weighted_phase != b.epochs[e].weighted_phase);
    }
    CHECK(same_params(a.params, b.params));
  }

  SUBCASE("selecting on negated loss picks the argmin-loss epoch") {
    RunConfig rc = tiny_config();
    rc.metric_names = {"XE"};
    rc.metric_weights = {1.0};
    TrainResult r = run_training(ds, rc);
    std::size_t argmin = 0;
    for (std::size_t e = 1; e < r.epochs.size(); ++e)
      if (r.epochs[e].validation_loss < r.epochs[argmin].validation_loss) argmin = e;
    CHECK(r.champion_epoch == argmin);
  }

  SUBCASE("persists champion, vocabulary, history and log") {
    TempDir tmp;
    RunConfig rc = tiny_config();
    rc.out_dir = tmp.file("run");
    TrainResult r = run_training(ds, rc);
    CHECK(std::filesystem::exists(tmp.file("run/champion.ckpt")));
    CHECK(std::filesystem::exists(tmp.file("run/vocab.tsv")));
    CHECK(std::filesystem::exists(tmp.file("run/selection.tsv")));
    CHECK(std::filesystem::exists(tmp.file("run/train.log")));

    DecoderParams loaded = load_decoder(tmp.file("run/champion.ckpt"));
    CHECK(same_params(loaded, r.champion));
    Vocabulary vocab = read_vocabulary(tmp.file("run/vocab.tsv"));
    CHECK(vocab.size() == r.vocab.size());
  }

  SUBCASE("degenerate splits are config errors") {
    Dataset broken = ds;
    broken.splits.train.clear();
    RunConfig rc = tiny_config();
    CHECK_THROWS_AS(run_training(broken, rc), ConfigError);
    Dataset no_val = ds;
    no_val.splits.validation.clear();
    CHECK_THROWS_AS(run_training(no_val, rc), ConfigError);
  }
}
