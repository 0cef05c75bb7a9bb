// Copyright 2026 The Segstream Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "segstream/common.hh"
#include "segstream/corpus.hh"
#include "segstream/decoder.hh"
#include "segstream/experiment.hh"
#include "segstream/metrics.hh"
#include "segstream/transducer.hh"

namespace fs = std::filesystem;

namespace segstream {
namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  return cells;
}

const char* kMicroConfig = R"({
  "seed": 5,
  "grammar": {"vocabulary_size": 8, "sentence_len_min": 3,
              "sentence_len_max": 4, "abbreviation_tokens": ["ltd."]},
  "utterance": {"n_sentences": 2, "feature_dim": 8},
  "corpus": {"n_train_paragraphs": 4, "n_heldout_paragraphs": 2,
             "n_train_utterances": 6, "n_eval_utterances": 3,
             "eval": {"hesitation_prob": 0.5, "sentence_len_min": 3,
                      "sentence_len_max": 4}},
  "teacher": {"embed_dim": 6, "hidden_dim": 8, "dec_dim": 6, "epochs": 3,
              "window": 16, "overlap": 4},
  "transducer": {"hidden_dim": 8, "pred_dim": 6, "right_context": 2,
                 "epochs": 6, "batch_size": 2,
                 "finetune_epochs": 3, "finetune_learning_rate": 0.1},
  "decode": {"beam_size_pass1": 2, "beam_size_pass2": 2,
             "max_expansion_depth": 3, "eos_threshold": 3.5},
  "table": {"segmenters": ["none", "fixed:3", "vad", "eos-pause",
                           "eos-semantic"],
            "modes": [1, 3]},
  "ablation": {"biases": [-5, 0], "thresholds": [2, 4]}
})";

// One micro-scale pipeline run shared by the cases below; built on
// first use so config-only cases stay cheap.
struct MicroRun {
  ExperimentConfig config;
  std::string root;
};

const MicroRun& micro_run() {
  static MicroRun run = [] {
    MicroRun r;
    r.config = parse_experiment_config(kMicroConfig);
    r.root = (fs::temp_directory_path() / "segstream_experiment_fixture")
                 .string();
    fs::remove_all(r.root);
    run_e2e_pipeline(r.config, r.root, /*force=*/false);
    return r;
  }();
  return run;
}

TEST_CASE("the default configuration is valid and round-trips") {
  ExperimentConfig c = default_experiment_config();
  c.validate();
  std::string canon = experiment_config_json(c);
  ExperimentConfig back = parse_experiment_config(canon);
  CHECK(experiment_config_json(back) == canon);
  CHECK(back.seed == c.seed);
  CHECK(back.grammar.vocabulary == c.grammar.vocabulary);
  CHECK(back.table_rows == c.table_rows);
  CHECK(back.ablation_thresholds == c.ablation_thresholds);
}

TEST_CASE("strict parsing rejects unknown keys and conflicts") {
  CHECK_THROWS_AS(parse_experiment_config(R"({"sneed": 1})"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"grammar": {"bogus": 1}})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(
                      R"({"grammar": {"vocabulary": ["a", "b", "c", "d"],
                          "vocabulary_size": 4}})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"seed": -1})"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"seed": 1.5})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_experiment_config("{nope"), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"teacher": {"epochs": "three"}})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(R"({"decode": {"use_vad_filter": 1}})"),
                  ValidationError);
  // vocabulary_size synthesizes the word list.
  ExperimentConfig c =
      parse_experiment_config(R"({"grammar": {"vocabulary_size": 8}})");
  CHECK(c.grammar.vocabulary == make_vocabulary(8));
}

TEST_CASE("table rows must name their teacher") {
  auto with_rows = [](const std::string& rows) {
    return std::string(R"({"table": {"segmenters": )" ) + rows + "}}";
  };
  CHECK_THROWS_AS(parse_experiment_config(with_rows(R"(["eos"])")),
                  ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(with_rows(R"(["eos:2.5"])")),
                  ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(with_rows(R"(["banana"])")),
                  ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(with_rows(R"([])")),
                  ValidationError);
  ExperimentConfig c = parse_experiment_config(
      with_rows(R"(["eos-semantic:2.5", "eos-pause:1.5", "fixed:4"])"));
  CHECK(c.table_rows.size() == 3);
}

TEST_CASE("table modes must be a strictly increasing subset of 1..3") {
  auto with_modes = [](const std::string& modes) {
    return std::string(R"({"table": {"modes": )") + modes + "}}";
  };
  CHECK_THROWS_AS(parse_experiment_config(with_modes("[1, 1]")),
                  ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(with_modes("[3, 1]")),
                  ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(with_modes("[0]")), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(with_modes("[4]")), ValidationError);
  CHECK_THROWS_AS(parse_experiment_config(with_modes("[]")), ValidationError);
  CHECK(parse_experiment_config(with_modes("[2, 3]")).table_modes ==
        std::vector<int>{2, 3});
}

TEST_CASE("ablation grids are validated") {
  auto with_ablation = [](const std::string& body) {
    return std::string(R"({"ablation": )") + body + "}";
  };
  CHECK_THROWS_AS(parse_experiment_config(with_ablation(R"({"biases": []})")),
                  ValidationError);
  CHECK_THROWS_AS(
      parse_experiment_config(with_ablation(R"({"thresholds": []})")),
      ValidationError);
  CHECK_THROWS_AS(
      parse_experiment_config(with_ablation(R"({"thresholds": [2, 2]})")),
      ValidationError);
  CHECK_THROWS_AS(
      parse_experiment_config(with_ablation(R"({"thresholds": [-1, 2]})")),
      ValidationError);
  CHECK_THROWS_AS(
      parse_experiment_config(with_ablation(R"({"biases": [0, -5]})")),
      ValidationError);
  // Negative biases are fine as long as the list increases.
  ExperimentConfig c = parse_experiment_config(
      with_ablation(R"({"biases": [-5, 0, 5], "thresholds": [1, 2]})"));
  CHECK(c.ablation_biases == std::vector<double>{-5, 0, 5});
}

TEST_CASE("vocabulary synthesis is deterministic and distinct") {
  CHECK_THROWS_AS(make_vocabulary(0), ValidationError);
  std::vector<std::string> v = make_vocabulary(500);
  REQUIRE(v.size() == 500);
  CHECK(std::set<std::string>(v.begin(), v.end()).size() == 500);
  for (const std::string& w : v) {
    REQUIRE(!w.empty());
    for (char ch : w) CHECK((ch >= 'a' && ch <= 'z'));
  }
  CHECK(make_vocabulary(500) == v);
  // Prefix property: a smaller vocabulary is a prefix of a larger one.
  std::vector<std::string> v8 = make_vocabulary(8);
  CHECK(std::equal(v8.begin(), v8.end(), v.begin()));
}

TEST_CASE("bias tags are file-name safe") {
  CHECK(bias_tag(-5.0) == "m5");
  CHECK(bias_tag(0.0) == "p0");
  CHECK(bias_tag(5.0) == "p5");
  CHECK(bias_tag(2.5) == "p2_5");
  CHECK(bias_tag(-2.5) == "m2_5");
  CHECK(bias_tag(0.25) == "p0_25");
  CHECK(bias_tag(10.0) == "p10");
}

TEST_CASE("run directory layout is canonical") {
  RunPaths p("/r");
  CHECK(p.config_copy() == "/r/config.json");
  CHECK(p.train_paragraphs() == "/r/corpus/train_paragraphs.txt");
  CHECK(p.heldout_paragraphs() == "/r/corpus/heldout_paragraphs.txt");
  CHECK(p.train_corpus() == "/r/corpus/train.jsonl");
  CHECK(p.eval_corpus() == "/r/corpus/eval.jsonl");
  CHECK(p.teacher_model() == "/r/models/teacher.json");
  CHECK(p.teacher_eval_report() == "/r/reports/teacher_eval.json");
  CHECK(p.semantic_annotations(-5.0) == "/r/annotations/semantic_m5.jsonl");
  CHECK(p.pause_annotations() == "/r/annotations/pause.jsonl");
  CHECK(p.base_model() == "/r/models/base.json");
  CHECK(p.semantic_model(0.0) == "/r/models/eos_semantic_p0.json");
  CHECK(p.pause_model() == "/r/models/eos_pause.json");
  CHECK(p.table_csv() == "/r/reports/table.csv");
  CHECK(p.table_manifest() == "/r/reports/table_manifest.json");
  CHECK(p.ablation_csv() == "/r/reports/ablation.csv");
  CHECK(p.ablation_argmin_csv() == "/r/reports/ablation_argmin.csv");
  CHECK(p.ablation_svg() == "/r/reports/ablation.svg");
  CHECK(p.manifest() == "/r/manifest.json");
}

TEST_CASE("label rows round-trip as JSONL") {
  std::string path =
      (fs::temp_directory_path() / "segstream_labels_test.jsonl").string();
  std::vector<std::vector<uint8_t>> labels = {{0, 1, 0}, {}, {1, 1}};
  write_labels_jsonl(path, labels);
  CHECK(read_labels_jsonl(path) == labels);
  fs::remove(path);
  CHECK_THROWS_AS(read_labels_jsonl("/nonexistent/labels.jsonl"),
                  ValidationError);
}

TEST_CASE("decode outputs round-trip as JSONL") {
  SegmentationOutput a;
  a.total_frames = 500;
  a.frame_ms = 10.0;
  a.segments = {{{"one", "two"}, 220, 220, BoundaryCause::kEos},
                {{"three"}, 400, 400, BoundaryCause::kVad},
                {{}, 500, 500, BoundaryCause::kEndOfAudio}};
  a.events = {{220, 220, BoundaryCause::kEos},
              {400, 400, BoundaryCause::kVad},
              {500, 500, BoundaryCause::kEndOfAudio}};
  SegmentationOutput b;
  b.total_frames = 80;
  b.frame_ms = 25.0;
  b.segments = {{{"solo"}, 50, 50, BoundaryCause::kFixed},
                {{"tail"}, 80, 80, BoundaryCause::kForced}};
  b.events = {{50, 50, BoundaryCause::kFixed},
              {80, 80, BoundaryCause::kForced}};

  std::string path =
      (fs::temp_directory_path() / "segstream_decodes_test.jsonl").string();
  write_decodes_jsonl(path, {a, b});
  std::vector<SegmentationOutput> back = read_decodes_jsonl(path);
  fs::remove(path);
  REQUIRE(back.size() == 2);
  const SegmentationOutput* want[] = {&a, &b};
  for (int i = 0; i < 2; ++i) {
    CHECK(back[i].total_frames == want[i]->total_frames);
    CHECK(back[i].frame_ms == want[i]->frame_ms);
    REQUIRE(back[i].segments.size() == want[i]->segments.size());
    REQUIRE(back[i].events.size() == want[i]->events.size());
    for (size_t s = 0; s < back[i].segments.size(); ++s) {
      CHECK(back[i].segments[s].tokens == want[i]->segments[s].tokens);
      CHECK(back[i].segments[s].boundary_frame ==
            want[i]->segments[s].boundary_frame);
      CHECK(back[i].segments[s].eos_emission_frame ==
            want[i]->segments[s].eos_emission_frame);
      CHECK(back[i].segments[s].cause == want[i]->segments[s].cause);
      CHECK(back[i].events[s].decision_frame ==
            want[i]->events[s].decision_frame);
      CHECK(back[i].events[s].emission_frame ==
            want[i]->events[s].emission_frame);
      CHECK(back[i].events[s].cause == want[i]->events[s].cause);
    }
  }
  CHECK_THROWS_AS(read_decodes_jsonl("/nonexistent/decodes.jsonl"),
                  ValidationError);
}

SpokenUtterance hand_utterance(std::vector<std::string> tokens,
                               std::set<int> eos_after,
                               std::vector<int> end_frames, int total) {
  SpokenUtterance u;
  u.tokens = std::move(tokens);
  u.eos_after = std::move(eos_after);
  u.frames.frame_ms = 10.0;
  u.frames.frames = Matrix(total, 2);
  for (size_t i = 0; i < end_frames.size(); ++i) {
    int start = i == 0 ? 0 : end_frames[i - 1] + 2;
    u.alignment.entries.push_back(
        {static_cast<int>(i), start, end_frames[i]});
  }
  return u;
}

SegmentationOutput hand_output(
    int total, std::vector<std::tuple<std::vector<std::string>, int,
                                      BoundaryCause>> segs) {
  SegmentationOutput out;
  out.total_frames = total;
  out.frame_ms = 10.0;
  for (auto& [tokens, boundary, cause] : segs) {
    out.segments.push_back({tokens, boundary, boundary, cause});
    out.events.push_back({boundary, boundary, cause});
  }
  return out;
}

TEST_CASE("metrics pooling matches a hand computation") {
  // Utterance 0: reference a b c, sentence end after c (index 2),
  // word ends at frames 10, 20, 30 of 40. Decoded a b | c with an EOS
  // cut at frame 25.
  SpokenUtterance u0 = hand_utterance({"a", "b", "c"}, {2}, {10, 20, 30}, 40);
  SegmentationOutput o0 = hand_output(
      40, {{{"a", "b"}, 25, BoundaryCause::kEos},
           {{"c"}, 40, BoundaryCause::kEndOfAudio}});
  // Utterance 1: reference a b, end after b (index 1), word ends at 10
  // and 20 of 30. Decoded a x | (empty) with a pause cut at 22.
  SpokenUtterance u1 = hand_utterance({"a", "b"}, {1}, {10, 20}, 30);
  SegmentationOutput o1 = hand_output(
      30, {{{"a", "x"}, 22, BoundaryCause::kVad},
           {{}, 30, BoundaryCause::kEndOfAudio}});

  MetricsReport r = pool_metrics({o0, o1}, {u0, u1});
  // One substitution over five reference words.
  CHECK(r.wer == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(r.substitutions == 1);
  CHECK(r.deletions == 0);
  CHECK(r.insertions == 0);
  CHECK(r.n_segments == 4);
  // Pooled lengths {0.25, 0.15, 0.22, 0.08} s.
  REQUIRE(r.sl50.has_value());
  REQUIRE(r.sl90.has_value());
  CHECK(*r.sl50 == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(*r.sl90 == doctest::Approx(0.25).epsilon(1e-12));
  // Latencies: 250 - 200 = 50 ms and 220 - 200 = 20 ms.
  REQUIRE(r.eos50.has_value());
  REQUIRE(r.eos90.has_value());
  CHECK(*r.eos50 == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(*r.eos90 == doctest::Approx(50.0).epsilon(1e-12));
  // Boundary positions: utterance 0 predicts token 1 against {2},
  // utterance 1 predicts token 1 against {1}: tp 1, 2 predictions,
  // 2 references.
  CHECK(r.precision == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.recall == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.f1 == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("metrics pooling edge cases") {
  SpokenUtterance u = hand_utterance({"a"}, {0}, {10}, 20);
  SegmentationOutput o =
      hand_output(20, {{{"a"}, 20, BoundaryCause::kEndOfAudio}});
  CHECK_THROWS_AS(pool_metrics({o}, {u, u}), ValidationError);

  // End-of-audio boundaries yield no latencies and no predictions.
  MetricsReport r = pool_metrics({o}, {u});
  CHECK_FALSE(r.eos50.has_value());
  CHECK_FALSE(r.eos90.has_value());
  CHECK(r.precision == 0.0);
  CHECK(r.recall == 0.0);
  CHECK(r.f1 == 0.0);

  // No predictions and no references is a perfect segmentation.
  SpokenUtterance u2 = hand_utterance({"a"}, {}, {10}, 20);
  MetricsReport r2 = pool_metrics({o}, {u2});
  CHECK(r2.f1 == 1.0);
  CHECK(r2.precision == 1.0);
  CHECK(r2.recall == 1.0);

  MetricsReport r3 = pool_metrics({}, {});
  CHECK(r3.wer == 0.0);
  CHECK_FALSE(r3.sl50.has_value());
  CHECK(r3.f1 == 1.0);
  CHECK(r3.n_segments == 0);
}

TEST_CASE("metrics reports serialize with explicit nulls") {
  MetricsReport r;
  r.wer = 0.25;
  r.substitutions = 2;
  r.deletions = 1;
  r.insertions = 0;
  r.sl50 = 1.5;
  r.f1 = 0.75;
  r.n_segments = 7;
  nlohmann::json j = nlohmann::json::parse(metrics_report_json(r));
  CHECK(j.at("wer").get<double>() == 0.25);
  CHECK(j.at("substitutions").get<int>() == 2);
  CHECK(j.at("sl50").get<double>() == 1.5);
  CHECK(j.at("sl90").is_null());
  CHECK(j.at("eos50").is_null());
  CHECK(j.at("f1").get<double>() == 0.75);
  CHECK(j.at("n_segments").get<int>() == 7);
}

TEST_CASE("corpus evaluation equals pooling its decodes") {
  GrammarSpec g;
  g.vocabulary = make_vocabulary(8);
  g.sentence_len_min = 3;
  g.sentence_len_max = 4;
  g.seed = 33;
  UtteranceSpec us;
  us.n_sentences = 2;
  us.feature_dim = 8;
  us.seed = 33;
  std::vector<SpokenUtterance> corpus = gen_spoken_corpus(g, us, 2);
  RnntHyper h;
  h.hidden_dim = 8;
  h.pred_dim = 6;
  h.right_context = 2;
  h.seed = 33;
  RnntParams model = init_rnnt(spoken_vocabulary(g), 8, h);
  DecodeConfig cfg;
  cfg.beam_size_pass1 = 2;
  cfg.beam_size_pass2 = 2;
  cfg.max_expansion_depth = 3;
  cfg.segmenter = parse_segmenter("fixed:2", 400.0, 2.0);

  std::vector<SegmentationOutput> outputs;
  MetricsReport direct = evaluate_corpus(model, corpus, cfg, &outputs);
  REQUIRE(outputs.size() == corpus.size());
  MetricsReport pooled = pool_metrics(outputs, corpus);
  CHECK(direct.wer == pooled.wer);
  CHECK(direct.substitutions == pooled.substitutions);
  CHECK(direct.deletions == pooled.deletions);
  CHECK(direct.insertions == pooled.insertions);
  CHECK(direct.sl50 == pooled.sl50);
  CHECK(direct.sl90 == pooled.sl90);
  CHECK(direct.eos50 == pooled.eos50);
  CHECK(direct.eos90 == pooled.eos90);
  CHECK(direct.f1 == pooled.f1);
  CHECK(direct.n_segments == pooled.n_segments);

  // The JSONL form preserves everything pooling consumes.
  std::string path =
      (fs::temp_directory_path() / "segstream_eval_decodes.jsonl").string();
  write_decodes_jsonl(path, outputs);
  std::vector<SegmentationOutput> back = read_decodes_jsonl(path);
  fs::remove(path);
  MetricsReport reread = pool_metrics(back, corpus);
  CHECK(reread.wer == pooled.wer);
  CHECK(reread.f1 == pooled.f1);
  CHECK(reread.sl50 == pooled.sl50);
}

TEST_CASE("the pipeline produces the full run layout") {
  const MicroRun& run = micro_run();
  RunPaths paths(run.root);
  for (const std::string& p :
       {paths.config_copy(), paths.train_paragraphs(),
        paths.heldout_paragraphs(), paths.train_corpus(), paths.eval_corpus(),
        paths.teacher_model(), paths.teacher_eval_report(),
        paths.semantic_annotations(-5.0), paths.semantic_annotations(0.0),
        paths.pause_annotations(), paths.base_model(),
        paths.semantic_model(-5.0), paths.semantic_model(0.0),
        paths.pause_model(), paths.table_csv(), paths.table_manifest(),
        paths.ablation_csv(), paths.ablation_argmin_csv(),
        paths.ablation_svg(), paths.manifest()}) {
    INFO("missing ", p);
    CHECK(fs::exists(p));
  }

  nlohmann::json manifest = nlohmann::json::parse(slurp(paths.manifest()));
  CHECK(manifest.at("kind").get<std::string>() == "run-manifest");
  CHECK(manifest.at("config_hash").get<std::string>() ==
        fnv1a64_hex(experiment_config_json(run.config)));
  CHECK(!manifest.contains("failed_stage"));
  CHECK(manifest.at("stages").size() == 7);

  // The config copy reparses to the same canonical form.
  CHECK(slurp(paths.config_copy()) == experiment_config_json(run.config));

  // Annotation rows line up with the training corpus.
  std::vector<SpokenUtterance> train = read_corpus_jsonl(paths.train_corpus());
  REQUIRE(static_cast<int>(train.size()) ==
          run.config.corpus.n_train_utterances);
  for (const std::string& ann :
       {paths.semantic_annotations(0.0), paths.pause_annotations()}) {
    std::vector<std::vector<uint8_t>> labels = read_labels_jsonl(ann);
    REQUIRE(labels.size() == train.size());
    for (size_t i = 0; i < labels.size(); ++i) {
      CHECK(labels[i].size() == train[i].tokens.size());
    }
  }
}

TEST_CASE("the results table is deterministic and faithful to disk") {
  const MicroRun& run = micro_run();
  RunPaths paths(run.root);
  TableReport report = run_table(run.config, paths);
  CHECK(report.csv == slurp(paths.table_csv()));

  std::vector<std::string> lines = csv_lines(report.csv);
  REQUIRE(lines.size() == 1 + run.config.table_rows.size());
  CHECK(lines[0] ==
        "segmenter,SL50,SL90,EOS50,EOS90,WER_mode1,WER_mode2,WER_mode3");
  REQUIRE(report.rows.size() == run.config.table_rows.size());
  for (size_t i = 0; i < report.rows.size(); ++i) {
    const TableRowResult& row = report.rows[i];
    CHECK(row.segmenter == run.config.table_rows[i]);
    CHECK(row.error.empty());
    std::vector<std::string> cells = split_csv_row(lines[i + 1]);
    REQUIRE(cells.size() == 8);
    CHECK(cells[0] == row.segmenter);
    // Requested modes are present, the unrequested mode 2 is not and
    // renders as a dash.
    CHECK(row.by_mode[0].has_value());
    CHECK_FALSE(row.by_mode[1].has_value());
    CHECK(row.by_mode[2].has_value());
    CHECK(cells[6] == "-");
    CHECK(cells[5] != "-");
    CHECK(cells[7] != "-");
    // Rows without pause or EOS cuts render dash latency cells.
    if (row.segmenter == "none" || row.segmenter.rfind("fixed", 0) == 0) {
      CHECK(cells[3] == "-");
      CHECK(cells[4] == "-");
    }
  }
}

TEST_CASE("the ablation sweep reports per-bias argmins") {
  const MicroRun& run = micro_run();
  RunPaths paths(run.root);
  AblationReport report = run_ablation(run.config, paths);
  CHECK(report.csv == slurp(paths.ablation_csv()));
  CHECK(report.warnings.empty());
  REQUIRE(report.points.size() == 4);  // 2 biases x 2 thresholds
  REQUIRE(report.argmins.size() == 2);

  for (const AblationArgmin& am : report.argmins) {
    double best = 1e9;
    double best_threshold = 0.0;
    for (const AblationPoint& pt : report.points) {
      if (pt.bias != am.bias) continue;
      if (pt.wer < best) {
        best = pt.wer;
        best_threshold = pt.threshold;  // first hit is the lowest threshold
      }
    }
    CHECK(am.wer == best);
    CHECK(am.threshold == best_threshold);
  }

  // The plot on disk is exactly the render of the grid CSV.
  CHECK(ablation_svg_from_csv(report.csv) == slurp(paths.ablation_svg()));
  std::string svg = slurp(paths.ablation_svg());
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 3);
  size_t polylines = 0;
  for (size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos;
       ++pos) {
    ++polylines;
  }
  CHECK(polylines == 2);  // one per bias

  // The argmin CSV carries one row per bias.
  std::vector<std::string> argmin_lines =
      csv_lines(slurp(paths.ablation_argmin_csv()));
  REQUIRE(argmin_lines.size() == 3);
  CHECK(argmin_lines[0] == "bias,argmin_threshold,wer");
}

TEST_CASE("the plot renderer validates its input") {
  CHECK_THROWS_AS(ablation_svg_from_csv("nope,nope\n1,2\n"), ValidationError);
  CHECK_THROWS_AS(ablation_svg_from_csv("bias,threshold,wer\n"),
                  ValidationError);
  CHECK_THROWS_AS(ablation_svg_from_csv("bias,threshold,wer\n1,2\n"),
                  ValidationError);
  std::string svg =
      ablation_svg_from_csv("bias,threshold,wer\n0,1,0.5\n0,2,0.4\n");
  CHECK(svg.find("<svg") != std::string::npos);
}

TEST_CASE("a missing checkpoint degrades one table row") {
  const MicroRun& run = micro_run();
  std::string copy_root =
      (fs::temp_directory_path() / "segstream_experiment_degraded").string();
  fs::remove_all(copy_root);
  fs::copy(run.root, copy_root, fs::copy_options::recursive);
  RunPaths paths(copy_root);
  fs::remove(paths.pause_model());
  fs::remove(paths.semantic_model(0.0));

  TableReport report = run_table(run.config, paths);
  REQUIRE(report.rows.size() == 5);
  std::vector<std::string> lines = csv_lines(report.csv);
  for (size_t i = 0; i < report.rows.size(); ++i) {
    const TableRowResult& row = report.rows[i];
    bool degraded =
        row.segmenter == "eos-pause" || row.segmenter == "eos-semantic";
    if (degraded) {
      CHECK(!row.error.empty());
      CHECK_FALSE(row.by_mode[0].has_value());
      std::vector<std::string> cells = split_csv_row(lines[i + 1]);
      for (size_t cidx = 1; cidx < cells.size(); ++cidx) {
        CHECK(cells[cidx] == "-");
      }
    } else {
      CHECK(row.error.empty());
      CHECK(row.by_mode[0].has_value());
    }
  }
  fs::remove_all(copy_root);
}

TEST_CASE("the pipeline refuses to overwrite without force") {
  const MicroRun& run = micro_run();
  CHECK_THROWS_AS(run_e2e_pipeline(run.config, run.root, /*force=*/false),
                  ValidationError);
  // The refusal left the previous artifacts alone.
  CHECK(fs::exists(RunPaths(run.root).manifest()));
}

TEST_CASE("a stage failure names its stage and writes the manifest") {
  std::string root =
      (fs::temp_directory_path() / "segstream_experiment_blocked").string();
  fs::remove_all(root);
  fs::create_directories(root);
  // A regular file where the corpus directory must go breaks the first
  // stage; force bypasses only the existence refusal.
  std::ofstream(root + "/corpus").put('\n');
  const MicroRun& run = micro_run();
  try {
    run_e2e_pipeline(run.config, root, /*force=*/true);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage == "gen");
  }
  nlohmann::json manifest =
      nlohmann::json::parse(slurp(RunPaths(root).manifest()));
  CHECK(manifest.at("failed_stage").get<std::string>() == "gen");
  fs::remove_all(root);
}

TEST_CASE("individual stages demand their inputs") {
  const MicroRun& run = micro_run();
  std::string root =
      (fs::temp_directory_path() / "segstream_experiment_empty").string();
  fs::remove_all(root);
  fs::create_directories(root);
  RunPaths paths(root);
  CHECK_THROWS_AS(stage_teach_train(run.config, paths), ValidationError);
  CHECK_THROWS_AS(stage_annotate(run.config, paths), ValidationError);
  CHECK_THROWS_AS(stage_train_base(run.config, paths), ValidationError);
  CHECK_THROWS_AS(stage_finetune(run.config, paths), ValidationError);
  CHECK_THROWS_AS(run_table(run.config, paths), ValidationError);
  CHECK_THROWS_AS(run_ablation(run.config, paths), ValidationError);
  fs::remove_all(root);
}

TEST_CASE("a forced rerun overwrites in place") {
  const MicroRun& run = micro_run();
  std::string before = slurp(RunPaths(run.root).table_csv());
  run_e2e_pipeline(run.config, run.root, /*force=*/true);
  CHECK(slurp(RunPaths(run.root).table_csv()) == before);
  nlohmann::json manifest =
      nlohmann::json::parse(slurp(RunPaths(run.root).manifest()));
  CHECK(!manifest.contains("failed_stage"));
}

}  // namespace
}  // namespace segstream
