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
// Experiment orchestration over one run directory: corpus generation,
// teacher training and annotation, base training, EOS fine-tuning (one
// checkpoint per teacher bias plus one from the pause teacher), the
// segmenter-by-mode results table, and the bias-by-threshold ablation
// with its plot. Configuration is strict JSON; every stage is
// deterministic in the master seed.

#ifndef SEGSTREAM_EXPERIMENT_HH_
#define SEGSTREAM_EXPERIMENT_HH_

#include <array>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "segstream/corpus.hh"
#include "segstream/decoder.hh"
#include "segstream/metrics.hh"
#include "segstream/teacher.hh"
#include "segstream/transducer.hh"

namespace segstream {

// A pipeline stage that could not finish. `stage` names the failing
// stage for the manifest and the process exit path.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage_name, const std::string& message)
      : std::runtime_error(stage_name + ": " + message), stage(stage_name) {}
  std::string stage;
};

struct CorpusSizes {
  int n_train_paragraphs = 60;
  int n_heldout_paragraphs = 20;
  int n_train_utterances = 48;
  int n_eval_utterances = 12;
};

struct ExperimentConfig {
  uint64_t seed = 1;
  GrammarSpec grammar;
  UtteranceSpec utterance;
  CorpusSizes corpus;
  // Evaluation-corpus variants; parsing copies the base specs and then
  // applies the overrides from the config's corpus.eval block.
  GrammarSpec eval_grammar;
  UtteranceSpec eval_utterance;
  TeacherHyper teacher;
  double pause_silence_threshold_ms = 400.0;
  RnntHyper transducer;
  RnntHyper finetune;  // transducer hyper with the finetune.* overrides
  DecodeConfig decode;
  double segmenter_vad_ms = 400.0;
  std::vector<std::string> table_rows = {"none",      "fixed:3",
                                         "fixed:5",   "fixed:10",
                                         "vad",       "eos-pause",
                                         "eos-semantic"};
  std::vector<int> table_modes = {1, 2, 3};
  std::vector<double> ablation_biases = {-5.0, 0.0, 5.0};
  std::vector<double> ablation_thresholds = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};

  void validate() const;
};

// Deterministic pronounceable placeholder words, distinct for n within
// any practical vocabulary size.
std::vector<std::string> make_vocabulary(int n);

ExperimentConfig default_experiment_config();

// Strict parse: an unknown key anywhere in the document is an error,
// as is a "grammar" block with both "vocabulary" and "vocabulary_size".
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical key-sorted JSON of the resolved config; its hash goes into
// run manifests.
std::string experiment_config_json(const ExperimentConfig& config);

// File-name-safe tag for a teacher bias: -5 -> "m5", 0 -> "p0",
// 2.5 -> "p2_5".
std::string bias_tag(double bias);

// Canonical layout of one run directory.
struct RunPaths {
  explicit RunPaths(std::string root_dir) : root(std::move(root_dir)) {}
  std::string root;

  std::string config_copy() const;
  std::string train_paragraphs() const;
  std::string heldout_paragraphs() const;
  std::string train_corpus() const;
  std::string eval_corpus() const;
  std::string teacher_model() const;
  std::string teacher_eval_report() const;
  std::string semantic_annotations(double bias) const;
  std::string pause_annotations() const;
  std::string base_model() const;
  std::string semantic_model(double bias) const;
  std::string pause_model() const;
  std::string table_csv() const;
  std::string table_manifest() const;
  std::string ablation_csv() const;
  std::string ablation_argmin_csv() const;
  std::string ablation_svg() const;
  std::string manifest() const;
};

// Stage functions. Each reads its inputs from and writes its outputs
// to the canonical layout, creating directories as needed.
void stage_gen(const ExperimentConfig& config, const RunPaths& paths);
TeacherEval stage_teach_train(const ExperimentConfig& config,
                              const RunPaths& paths);
void stage_annotate(const ExperimentConfig& config, const RunPaths& paths);
void stage_train_base(const ExperimentConfig& config, const RunPaths& paths);
void stage_finetune(const ExperimentConfig& config, const RunPaths& paths);

// Decodes every utterance and pools the metrics: WER over summed error
// counts, percentiles over all segments, micro-averaged boundary F1
// against ground-truth sentence ends. `outputs` receives the raw
// decodes when non-null.
MetricsReport evaluate_corpus(const RnntParams& model,
                              const std::vector<SpokenUtterance>& corpus,
                              const DecodeConfig& decode,
                              std::vector<SegmentationOutput>* outputs =
                                  nullptr);

// Pools already-computed decodes against their references.
MetricsReport pool_metrics(const std::vector<SegmentationOutput>& outputs,
                           const std::vector<SpokenUtterance>& corpus);

struct TableRowResult {
  std::string segmenter;
  // Reports indexed by mode - 1; absent when the mode was not
  // requested or the row failed.
  std::array<std::optional<MetricsReport>, 3> by_mode;
  std::string error;  // nonempty when the row was skipped
};

struct TableReport {
  std::vector<TableRowResult> rows;
  std::string csv;
};

// Decodes the evaluation corpus for every (segmenter row, mode) cell
// and writes the results table plus its manifest. A row whose
// checkpoint is missing is recorded as an error and rendered as "-"
// cells; other rows proceed.
TableReport run_table(const ExperimentConfig& config, const RunPaths& paths);

struct AblationPoint {
  double bias = 0.0;
  double threshold = 0.0;
  double wer = 0.0;
};

struct AblationArgmin {
  double bias = 0.0;
  double threshold = 0.0;
  double wer = 0.0;
};

struct AblationReport {
  std::vector<AblationPoint> points;
  std::vector<AblationArgmin> argmins;  // per bias, ties to the lowest
  std::vector<std::string> warnings;    // per-bias checkpoint problems
  std::string csv;
};

// Sweeps WER (first-pass mode) over the bias-by-threshold grid, writes
// the grid CSV, the per-bias argmin CSV, and an SVG line plot rendered
// from the grid CSV.
AblationReport run_ablation(const ExperimentConfig& config,
                            const RunPaths& paths);

// Renders the ablation plot from CSV text with columns
// bias,threshold,wer: one polyline per bias, thresholds on x, WER on y.
std::string ablation_svg_from_csv(const std::string& csv_text);

// The whole pipeline into `out_dir`: gen, teach-train, annotate,
// train-base, finetune, table, ablation, manifest. Refuses an existing
// output directory unless `force`; failures surface as StageError with
// partial outputs preserved. Stage begin/end lines go to `progress`
// when given.
void run_e2e_pipeline(const ExperimentConfig& config,
                      const std::string& out_dir, bool force,
                      std::ostream* progress = nullptr);

// Decode outputs as JSONL, one utterance per line with per-segment
// token lists, frame counts, millisecond times, and causes.
void write_decodes_jsonl(const std::string& path,
                         const std::vector<SegmentationOutput>& outputs);
std::vector<SegmentationOutput> read_decodes_jsonl(const std::string& path);

// Per-utterance EOS label rows as JSONL {"labels": [...]}.
void write_labels_jsonl(const std::string& path,
                        const std::vector<std::vector<uint8_t>>& labels);
std::vector<std::vector<uint8_t>> read_labels_jsonl(const std::string& path);

std::string metrics_report_json(const MetricsReport& report);

}  // namespace segstream

#endif  // SEGSTREAM_EXPERIMENT_HH_
