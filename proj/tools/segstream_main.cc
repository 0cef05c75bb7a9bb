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
//
// Command-line front end. Every subcommand operates on one run
// directory (--out) with a canonical layout; --config supplies the
// experiment description and --seed overrides its master seed.
// Exit codes: 0 success, 2 configuration or usage error, 3 stage
// failure.

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "segstream/annotate.hh"
#include "segstream/corpus.hh"
#include "segstream/decoder.hh"
#include "segstream/experiment.hh"
#include "segstream/metrics.hh"
#include "segstream/teacher.hh"
#include "segstream/transducer.hh"

namespace {

using namespace segstream;

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

AnnotatedTranscript annotate_paragraph(const std::string& paragraph,
                                       const GrammarSpec& grammar) {
  return normalize_to_spoken(
      paragraph,
      disambiguate_terminal(paragraph, grammar.abbreviation_tokens));
}

std::vector<Window> paragraph_windows(const std::vector<std::string>& lines,
                                      const GrammarSpec& grammar, int window,
                                      int overlap) {
  std::vector<Window> out;
  for (const auto& paragraph : lines) {
    AnnotatedTranscript t = annotate_paragraph(paragraph, grammar);
    if (t.tokens.empty()) continue;
    std::vector<Window> w = make_windows(t, window, overlap);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

// Bitwise comparison of all tensors outside the EOS joints.
void check_frozen_base(const RnntParams& base, const RnntParams& tuned) {
  RnntParams base_copy = base;
  RnntParams tuned_copy = tuned;
  std::vector<TensorView> bv = tensor_views(&base_copy);
  std::vector<TensorView> tv = tensor_views(&tuned_copy);
  const std::vector<std::string> eos_names = eos_tensor_names();
  for (size_t i = 0; i < bv.size(); ++i) {
    bool is_eos = std::find(eos_names.begin(), eos_names.end(), bv[i].name) !=
                  eos_names.end();
    if (is_eos) continue;
    if (bv[i].size != tv[i].size ||
        std::memcmp(bv[i].data, tv[i].data, bv[i].size * sizeof(double)) !=
            0) {
      throw InternalError("freeze check failed: tensor " + bv[i].name +
                          " changed during fine-tuning");
    }
  }
}

struct CliState {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool force = false;

  CLI::Option* seed_opt = nullptr;

  ExperimentConfig config() const {
    ExperimentConfig c = config_path.empty()
                             ? default_experiment_config()
                             : load_experiment_config(config_path);
    if (seed_opt != nullptr && seed_opt->count() > 0) c.seed = seed;
    c.validate();
    return c;
  }

  RunPaths paths() const {
    if (out_dir.empty()) {
      throw ValidationError("this subcommand needs --out RUN_DIR");
    }
    return RunPaths(out_dir);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Long-form streaming speech segmentation workbench: synthetic "
      "corpora, a punctuation boundary teacher, a streaming transducer "
      "with an EOS head, segmenting decoders, and experiment reports."};
  app.require_subcommand(1);
  app.fallthrough();

  CliState cli;
  app.add_option("--config", cli.config_path,
                 "experiment config JSON (defaults when omitted)")
      ->check(CLI::ExistingFile);
  cli.seed_opt =
      app.add_option("--seed", cli.seed, "override the config's master seed");
  app.add_option("--out", cli.out_dir, "run directory");
  app.add_flag("--force", cli.force, "allow writing into an existing run");

  app.add_subcommand("gen", "generate written and spoken corpora");
  app.add_subcommand("annotate",
                     "normalize written paragraphs into spoken transcripts "
                     "with sentence-end labels");
  app.add_subcommand("teach-train",
                     "train the boundary teacher on written paragraphs");
  app.add_subcommand("teach-eval", "evaluate the teacher on heldout text");

  auto* teach_annotate = app.add_subcommand(
      "teach-annotate", "label the spoken training corpus with a teacher");
  std::string ta_teacher = "all";
  double ta_bias = 0.0;
  double ta_silence_ms = -1.0;
  teach_annotate->add_option("--teacher", ta_teacher, "semantic, pause or all")
      ->check(CLI::IsMember({"semantic", "pause", "all"}));
  auto* ta_bias_opt = teach_annotate->add_option(
      "--bias", ta_bias, "semantic teacher EOS bias (with --teacher semantic)");
  teach_annotate->add_option("--silence-threshold-ms", ta_silence_ms,
                             "pause teacher threshold override");

  app.add_subcommand("train-base", "train the base transducer");

  auto* finetune = app.add_subcommand(
      "finetune-eos", "fine-tune the EOS joints on teacher annotations");
  std::string ft_teacher = "all";
  double ft_bias = 0.0;
  double ft_lambda = 0.0;
  bool ft_freeze_check = false;
  std::string ft_annotations, ft_model_out;
  finetune->add_option("--teacher", ft_teacher, "semantic, pause or all")
      ->check(CLI::IsMember({"semantic", "pause", "all"}));
  auto* ft_bias_opt = finetune->add_option(
      "--bias", ft_bias, "semantic teacher bias (with --teacher semantic)");
  auto* ft_lambda_opt = finetune->add_option(
      "--fastemit-lambda", ft_lambda, "FastEmit weight during fine-tuning");
  finetune->add_flag("--freeze-check", ft_freeze_check,
                     "verify non-EOS tensors stayed bitwise unchanged");
  finetune->add_option("--annotations", ft_annotations,
                       "labels JSONL (instead of the run-layout file)");
  finetune->add_option("--model-out", ft_model_out,
                       "checkpoint path (instead of the run-layout file)");

  auto* decode = app.add_subcommand(
      "decode", "segment and transcribe a spoken corpus");
  std::string dc_model, dc_corpus, dc_output, dc_segmenter = "none";
  int dc_mode = 1, dc_beam1 = 0, dc_beam2 = 0, dc_depth = 0;
  double dc_eos_threshold = 0.0, dc_max_segment_s = 0.0, dc_prune = 0.0;
  double dc_vad_energy = 0.0;
  bool dc_no_vad = false;
  decode->add_option("--model", dc_model,
                     "checkpoint (default: the run's base model)");
  decode->add_option("--corpus", dc_corpus,
                     "spoken corpus JSONL (default: the run's eval corpus)");
  decode->add_option("--output", dc_output,
                     "decodes JSONL (default: RUN_DIR/decodes/decode.jsonl)");
  decode->add_option("--mode", dc_mode, "operating mode 1, 2 or 3")
      ->check(CLI::Range(1, 3));
  decode->add_option("--segmenter", dc_segmenter,
                     "none | fixed:SECONDS | vad[:MS] | eos[:THRESHOLD]");
  auto* dc_eos_opt = decode->add_option("--eos-threshold", dc_eos_threshold,
                                        "EOS cost threshold override");
  auto* dc_cap_opt = decode->add_option("--max-segment-s", dc_max_segment_s,
                                        "forced finalization cap override");
  auto* dc_b1_opt = decode->add_option("--beam1", dc_beam1,
                                       "first-pass beam size override");
  auto* dc_b2_opt = decode->add_option("--beam2", dc_beam2,
                                       "second-pass beam size override");
  auto* dc_pr_opt = decode->add_option("--prune", dc_prune,
                                       "beam pruning threshold override");
  auto* dc_dp_opt = decode->add_option("--depth", dc_depth,
                                       "per-frame expansion depth override");
  auto* dc_ve_opt = decode->add_option("--vad-energy", dc_vad_energy,
                                       "silence energy threshold override");
  decode->add_flag("--no-vad-filter", dc_no_vad,
                   "decode every frame, keeping silence");

  auto* evalcmd = app.add_subcommand("eval", "score decodes against a corpus");
  std::string ev_decodes, ev_corpus, ev_output;
  evalcmd->add_option("--decodes", ev_decodes,
                      "decodes JSONL (default: RUN_DIR/decodes/decode.jsonl)");
  evalcmd->add_option("--corpus", ev_corpus,
                      "spoken corpus JSONL (default: the run's eval corpus)");
  evalcmd->add_option("--output", ev_output, "also write the report here");

  app.add_subcommand("table", "decode the segmenter-by-mode results table");
  app.add_subcommand("ablate", "sweep WER over teacher bias and EOS threshold");
  app.add_subcommand("e2e", "run the whole pipeline into a fresh directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const ExperimentConfig config = cli.config();

    if (app.got_subcommand("gen")) {
      RunPaths paths = cli.paths();
      stage_gen(config, paths);
      std::cout << paths.train_corpus() << "\n" << paths.eval_corpus() << "\n";
    } else if (app.got_subcommand("annotate")) {
      RunPaths paths = cli.paths();
      for (const char* which : {"train", "heldout"}) {
        std::string in = std::string(which) == "train"
                             ? paths.train_paragraphs()
                             : paths.heldout_paragraphs();
        std::vector<AnnotatedTranscript> ts;
        for (const auto& paragraph : read_lines(in)) {
          ts.push_back(annotate_paragraph(paragraph, config.grammar));
        }
        std::string out_path = paths.root + "/corpus/" + which +
                               "_transcripts.jsonl";
        write_transcripts_jsonl(out_path, ts);
        std::cout << out_path << "\n";
      }
    } else if (app.got_subcommand("teach-train")) {
      RunPaths paths = cli.paths();
      TeacherEval ev = stage_teach_train(config, paths);
      std::cout << "label_accuracy " << ev.label_accuracy
                << "\nfull_sequence_accuracy " << ev.full_sequence_accuracy
                << "\nf1 " << ev.f1 << "\n";
    } else if (app.got_subcommand("teach-eval")) {
      RunPaths paths = cli.paths();
      TeacherParams teacher = load_teacher(paths.teacher_model());
      TeacherEval ev = teacher_eval(
          teacher,
          paragraph_windows(read_lines(paths.heldout_paragraphs()),
                            config.grammar, teacher.window, teacher.overlap));
      std::cout << "label_accuracy " << ev.label_accuracy
                << "\nfull_sequence_accuracy " << ev.full_sequence_accuracy
                << "\nf1 " << ev.f1 << "\n";
    } else if (app.got_subcommand("teach-annotate")) {
      RunPaths paths = cli.paths();
      if (ta_teacher == "all") {
        stage_annotate(config, paths);
        std::cout << paths.pause_annotations() << "\n";
      } else if (ta_teacher == "semantic") {
        TeacherParams teacher = load_teacher(paths.teacher_model());
        std::vector<SpokenUtterance> corpus =
            read_corpus_jsonl(paths.train_corpus());
        std::vector<std::vector<uint8_t>> labels;
        for (const auto& utt : corpus) {
          labels.push_back(teacher_predict(teacher, utt.tokens, ta_bias));
        }
        write_labels_jsonl(paths.semantic_annotations(ta_bias), labels);
        std::cout << paths.semantic_annotations(ta_bias) << "\n";
      } else {
        if (ta_bias_opt->count() > 0) {
          throw ValidationError("--bias applies to the semantic teacher");
        }
        double threshold = ta_silence_ms > 0 ? ta_silence_ms
                                             : config.pause_silence_threshold_ms;
        std::vector<SpokenUtterance> corpus =
            read_corpus_jsonl(paths.train_corpus());
        std::vector<std::vector<uint8_t>> labels;
        for (const auto& utt : corpus) {
          labels.push_back(pause_teacher_annotate(utt.tokens, utt.alignment,
                                                  utt.frames, threshold));
        }
        write_labels_jsonl(paths.pause_annotations(), labels);
        std::cout << paths.pause_annotations() << "\n";
      }
    } else if (app.got_subcommand("train-base")) {
      RunPaths paths = cli.paths();
      stage_train_base(config, paths);
      std::cout << paths.base_model() << "\n";
    } else if (app.got_subcommand("finetune-eos")) {
      RunPaths paths = cli.paths();
      RnntHyper hyper = config.finetune;
      hyper.seed = mix_seed(config.seed, 109);
      if (ft_lambda_opt->count() > 0) hyper.fastemit_lambda = ft_lambda;
      if (ft_teacher == "all") {
        if (!ft_annotations.empty() || !ft_model_out.empty()) {
          throw ValidationError(
              "--annotations/--model-out need --teacher semantic or pause");
        }
        ExperimentConfig c = config;
        c.finetune = hyper;
        stage_finetune(c, paths);
        if (ft_freeze_check) {
          RnntParams base = load_rnnt(paths.base_model());
          check_frozen_base(base, load_rnnt(paths.pause_model()));
          check_frozen_base(base, load_rnnt(paths.semantic_model(0.0)));
          std::cerr << "freeze check ok\n";
        }
        std::cout << paths.pause_model() << "\n";
      } else {
        std::string ann_path, model_path;
        if (ft_teacher == "semantic") {
          ann_path = ft_annotations.empty()
                         ? paths.semantic_annotations(ft_bias)
                         : ft_annotations;
          model_path = ft_model_out.empty() ? paths.semantic_model(ft_bias)
                                            : ft_model_out;
        } else {
          if (ft_bias_opt->count() > 0) {
            throw ValidationError("--bias applies to the semantic teacher");
          }
          ann_path = ft_annotations.empty() ? paths.pause_annotations()
                                            : ft_annotations;
          model_path =
              ft_model_out.empty() ? paths.pause_model() : ft_model_out;
        }
        RnntParams base = load_rnnt(paths.base_model());
        RnntParams tuned = finetune_eos(base, read_corpus_jsonl(
                                                  paths.train_corpus()),
                                        read_labels_jsonl(ann_path), hyper);
        if (ft_freeze_check) {
          check_frozen_base(base, tuned);
          std::cerr << "freeze check ok\n";
        }
        save_rnnt(model_path, tuned);
        std::cout << model_path << "\n";
      }
    } else if (app.got_subcommand("decode")) {
      RunPaths paths = cli.paths();
      DecodeConfig d = config.decode;
      d.mode = dc_mode;
      if (dc_eos_opt->count() > 0) d.eos_threshold = dc_eos_threshold;
      if (dc_cap_opt->count() > 0) d.max_segment_s = dc_max_segment_s;
      if (dc_b1_opt->count() > 0) d.beam_size_pass1 = dc_beam1;
      if (dc_b2_opt->count() > 0) d.beam_size_pass2 = dc_beam2;
      if (dc_pr_opt->count() > 0) d.pruning_threshold = dc_prune;
      if (dc_dp_opt->count() > 0) d.max_expansion_depth = dc_depth;
      if (dc_ve_opt->count() > 0) d.vad_energy_threshold = dc_vad_energy;
      if (dc_no_vad) d.use_vad_filter = false;
      d.segmenter = parse_segmenter(dc_segmenter, config.segmenter_vad_ms,
                                    d.eos_threshold);
      RnntParams model =
          load_rnnt(dc_model.empty() ? paths.base_model() : dc_model);
      std::vector<SpokenUtterance> corpus = read_corpus_jsonl(
          dc_corpus.empty() ? paths.eval_corpus() : dc_corpus);
      std::vector<SegmentationOutput> outputs;
      outputs.reserve(corpus.size());
      for (const auto& utt : corpus) {
        outputs.push_back(decode_stream(model, utt.frames, d));
      }
      std::string out_path = dc_output.empty()
                                 ? paths.root + "/decodes/decode.jsonl"
                                 : dc_output;
      write_decodes_jsonl(out_path, outputs);
      std::cout << out_path << "\n";
    } else if (app.got_subcommand("eval")) {
      RunPaths paths = cli.paths();
      std::vector<SegmentationOutput> outputs = read_decodes_jsonl(
          ev_decodes.empty() ? paths.root + "/decodes/decode.jsonl"
                             : ev_decodes);
      std::vector<SpokenUtterance> corpus = read_corpus_jsonl(
          ev_corpus.empty() ? paths.eval_corpus() : ev_corpus);
      std::string report = metrics_report_json(pool_metrics(outputs, corpus));
      if (!ev_output.empty()) {
        std::ofstream out(ev_output);
        if (!out) throw ValidationError("cannot write " + ev_output);
        out << report;
      }
      std::cout << report;
    } else if (app.got_subcommand("table")) {
      RunPaths paths = cli.paths();
      TableReport report = run_table(config, paths);
      for (const auto& row : report.rows) {
        if (!row.error.empty()) {
          std::cerr << "row " << row.segmenter << " skipped: " << row.error
                    << "\n";
        }
      }
      std::cout << report.csv;
    } else if (app.got_subcommand("ablate")) {
      RunPaths paths = cli.paths();
      AblationReport report = run_ablation(config, paths);
      for (const auto& w : report.warnings) std::cerr << w << "\n";
      for (const auto& a : report.argmins) {
        std::cout << "bias " << a.bias << ": argmin threshold " << a.threshold
                  << " (wer " << a.wer << ")\n";
      }
    } else if (app.got_subcommand("e2e")) {
      if (cli.out_dir.empty()) {
        throw ValidationError("e2e needs --out RUN_DIR");
      }
      run_e2e_pipeline(config, cli.out_dir, cli.force, &std::cerr);
      std::cout << RunPaths(cli.out_dir).manifest() << "\n";
    }
  } catch (const StageError& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
