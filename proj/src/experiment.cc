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

#include "segstream/experiment.hh"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "segstream/annotate.hh"

namespace segstream {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Seed streams hung off the master seed, one per derived randomness
// consumer.
constexpr uint64_t kStreamWrittenTrain = 101;
constexpr uint64_t kStreamWrittenHeldout = 102;
constexpr uint64_t kStreamSpokenTrainGrammar = 103;
constexpr uint64_t kStreamSpokenTrainUtt = 104;
constexpr uint64_t kStreamSpokenEvalGrammar = 105;
constexpr uint64_t kStreamSpokenEvalUtt = 106;
constexpr uint64_t kStreamTeacher = 107;
constexpr uint64_t kStreamBase = 108;
constexpr uint64_t kStreamFinetune = 109;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << content;
}

std::string file_hash(const std::string& path) {
  return fnv1a64_hex(read_file(path));
}

// Fixed-precision formatting keeps report bytes reproducible.
std::string fmt_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
  return buf;
}

// Shortest clean form for grid values: -5 -> "-5", 2.5 -> "2.5".
std::string fmt_trim(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    quoted += c;
    if (c == '"') quoted += '"';
  }
  quoted += '"';
  return quoted;
}

// ---------------------------------------------------------------------
// Strict config parsing.

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  expect_object(j, where);
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) {
      if (item.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ValidationError(where + ": unknown key \"" + item.key() + "\"");
    }
  }
}

double get_num(const json& j, const char* key, double fallback,
               const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) {
    throw ValidationError(where + "." + key + ": expected a number");
  }
  return v.get<double>();
}

int get_int(const json& j, const char* key, int fallback,
            const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) {
    throw ValidationError(where + "." + key + ": expected an integer");
  }
  return v.get<int>();
}

bool get_bool(const json& j, const char* key, bool fallback,
              const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean()) {
    throw ValidationError(where + "." + key + ": expected a boolean");
  }
  return v.get<bool>();
}

std::vector<std::string> get_string_array(const json& v,
                                          const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": expected an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) {
      throw ValidationError(where + ": expected strings");
    }
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::vector<double> get_number_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw ValidationError(where + ": expected an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ValidationError(where + ": expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

void parse_grammar(const json& j, GrammarSpec* g) {
  check_keys(j, "grammar",
             {"vocabulary", "vocabulary_size", "sentence_len_min",
              "sentence_len_max", "terminal_punct_weights",
              "internal_punct_prob", "abbreviation_tokens"});
  if (j.contains("vocabulary") && j.contains("vocabulary_size")) {
    throw ValidationError(
        "grammar: give either vocabulary or vocabulary_size, not both");
  }
  if (j.contains("vocabulary")) {
    g->vocabulary = get_string_array(j.at("vocabulary"), "grammar.vocabulary");
  } else if (j.contains("vocabulary_size")) {
    g->vocabulary =
        make_vocabulary(get_int(j, "vocabulary_size", 32, "grammar"));
  }
  g->sentence_len_min =
      get_int(j, "sentence_len_min", g->sentence_len_min, "grammar");
  g->sentence_len_max =
      get_int(j, "sentence_len_max", g->sentence_len_max, "grammar");
  g->internal_punct_prob =
      get_num(j, "internal_punct_prob", g->internal_punct_prob, "grammar");
  if (j.contains("terminal_punct_weights")) {
    expect_object(j.at("terminal_punct_weights"),
                  "grammar.terminal_punct_weights");
    g->terminal_punct_weights.clear();
    for (const auto& item : j.at("terminal_punct_weights").items()) {
      if (!item.value().is_number()) {
        throw ValidationError(
            "grammar.terminal_punct_weights: expected numbers");
      }
      g->terminal_punct_weights[item.key()] = item.value().get<double>();
    }
  }
  if (j.contains("abbreviation_tokens")) {
    g->abbreviation_tokens = get_string_array(j.at("abbreviation_tokens"),
                                              "grammar.abbreviation_tokens");
  }
}

void parse_utterance(const json& j, UtteranceSpec* u) {
  check_keys(j, "utterance",
             {"n_sentences", "hesitation_prob", "hesitation_ms_min",
              "hesitation_ms_max", "inter_sentence_pause_ms_min",
              "inter_sentence_pause_ms_max", "intra_word_gap_ms",
              "word_duration_ms_min", "word_duration_ms_max", "noise_std",
              "frame_ms", "feature_dim"});
  u->n_sentences = get_int(j, "n_sentences", u->n_sentences, "utterance");
  u->hesitation_prob =
      get_num(j, "hesitation_prob", u->hesitation_prob, "utterance");
  u->hesitation_ms_min =
      get_int(j, "hesitation_ms_min", u->hesitation_ms_min, "utterance");
  u->hesitation_ms_max =
      get_int(j, "hesitation_ms_max", u->hesitation_ms_max, "utterance");
  u->inter_sentence_pause_ms_min = get_int(
      j, "inter_sentence_pause_ms_min", u->inter_sentence_pause_ms_min,
      "utterance");
  u->inter_sentence_pause_ms_max = get_int(
      j, "inter_sentence_pause_ms_max", u->inter_sentence_pause_ms_max,
      "utterance");
  u->intra_word_gap_ms =
      get_int(j, "intra_word_gap_ms", u->intra_word_gap_ms, "utterance");
  u->word_duration_ms_min =
      get_int(j, "word_duration_ms_min", u->word_duration_ms_min, "utterance");
  u->word_duration_ms_max =
      get_int(j, "word_duration_ms_max", u->word_duration_ms_max, "utterance");
  u->noise_std = get_num(j, "noise_std", u->noise_std, "utterance");
  u->frame_ms = get_num(j, "frame_ms", u->frame_ms, "utterance");
  u->feature_dim = get_int(j, "feature_dim", u->feature_dim, "utterance");
}

void parse_corpus(const json& j, ExperimentConfig* c) {
  check_keys(j, "corpus",
             {"n_train_paragraphs", "n_heldout_paragraphs",
              "n_train_utterances", "n_eval_utterances", "eval"});
  c->corpus.n_train_paragraphs = get_int(
      j, "n_train_paragraphs", c->corpus.n_train_paragraphs, "corpus");
  c->corpus.n_heldout_paragraphs = get_int(
      j, "n_heldout_paragraphs", c->corpus.n_heldout_paragraphs, "corpus");
  c->corpus.n_train_utterances = get_int(
      j, "n_train_utterances", c->corpus.n_train_utterances, "corpus");
  c->corpus.n_eval_utterances = get_int(
      j, "n_eval_utterances", c->corpus.n_eval_utterances, "corpus");
  if (!j.contains("eval")) return;
  const json& e = j.at("eval");
  check_keys(e, "corpus.eval",
             {"n_sentences", "hesitation_prob", "hesitation_ms_min",
              "hesitation_ms_max", "inter_sentence_pause_ms_min",
              "inter_sentence_pause_ms_max", "sentence_len_min",
              "sentence_len_max"});
  UtteranceSpec* u = &c->eval_utterance;
  u->n_sentences = get_int(e, "n_sentences", u->n_sentences, "corpus.eval");
  u->hesitation_prob =
      get_num(e, "hesitation_prob", u->hesitation_prob, "corpus.eval");
  u->hesitation_ms_min =
      get_int(e, "hesitation_ms_min", u->hesitation_ms_min, "corpus.eval");
  u->hesitation_ms_max =
      get_int(e, "hesitation_ms_max", u->hesitation_ms_max, "corpus.eval");
  u->inter_sentence_pause_ms_min = get_int(
      e, "inter_sentence_pause_ms_min", u->inter_sentence_pause_ms_min,
      "corpus.eval");
  u->inter_sentence_pause_ms_max = get_int(
      e, "inter_sentence_pause_ms_max", u->inter_sentence_pause_ms_max,
      "corpus.eval");
  c->eval_grammar.sentence_len_min = get_int(
      e, "sentence_len_min", c->eval_grammar.sentence_len_min, "corpus.eval");
  c->eval_grammar.sentence_len_max = get_int(
      e, "sentence_len_max", c->eval_grammar.sentence_len_max, "corpus.eval");
}

void parse_teacher(const json& j, TeacherHyper* t) {
  check_keys(j, "teacher",
             {"embed_dim", "hidden_dim", "dec_dim", "learning_rate", "epochs",
              "batch_size", "grad_clip_norm", "window", "overlap"});
  t->embed_dim = get_int(j, "embed_dim", t->embed_dim, "teacher");
  t->hidden_dim = get_int(j, "hidden_dim", t->hidden_dim, "teacher");
  t->dec_dim = get_int(j, "dec_dim", t->dec_dim, "teacher");
  t->learning_rate = get_num(j, "learning_rate", t->learning_rate, "teacher");
  t->epochs = get_int(j, "epochs", t->epochs, "teacher");
  t->batch_size = get_int(j, "batch_size", t->batch_size, "teacher");
  t->grad_clip_norm =
      get_num(j, "grad_clip_norm", t->grad_clip_norm, "teacher");
  t->window = get_int(j, "window", t->window, "teacher");
  t->overlap = get_int(j, "overlap", t->overlap, "teacher");
}

void parse_transducer(const json& j, RnntHyper* t, RnntHyper* finetune) {
  check_keys(j, "transducer",
             {"hidden_dim", "pred_dim", "right_context", "learning_rate",
              "epochs", "batch_size", "grad_clip_norm", "fastemit_lambda",
              "finetune_learning_rate", "finetune_epochs",
              "finetune_fastemit_lambda"});
  t->hidden_dim = get_int(j, "hidden_dim", t->hidden_dim, "transducer");
  t->pred_dim = get_int(j, "pred_dim", t->pred_dim, "transducer");
  t->right_context =
      get_int(j, "right_context", t->right_context, "transducer");
  t->learning_rate =
      get_num(j, "learning_rate", t->learning_rate, "transducer");
  t->epochs = get_int(j, "epochs", t->epochs, "transducer");
  t->batch_size = get_int(j, "batch_size", t->batch_size, "transducer");
  t->grad_clip_norm =
      get_num(j, "grad_clip_norm", t->grad_clip_norm, "transducer");
  t->fastemit_lambda =
      get_num(j, "fastemit_lambda", t->fastemit_lambda, "transducer");
  *finetune = *t;
  finetune->learning_rate = get_num(j, "finetune_learning_rate",
                                    finetune->learning_rate, "transducer");
  finetune->epochs =
      get_int(j, "finetune_epochs", finetune->epochs, "transducer");
  finetune->fastemit_lambda = get_num(
      j, "finetune_fastemit_lambda", finetune->fastemit_lambda, "transducer");
}

void parse_decode(const json& j, DecodeConfig* d, double* segmenter_vad_ms) {
  check_keys(j, "decode",
             {"beam_size_pass1", "beam_size_pass2", "pruning_threshold",
              "max_expansion_depth", "eos_threshold", "max_segment_s",
              "use_vad_filter", "vad_energy_threshold", "vad_initial_keep_ms",
              "segmenter_vad_ms"});
  d->beam_size_pass1 =
      get_int(j, "beam_size_pass1", d->beam_size_pass1, "decode");
  d->beam_size_pass2 =
      get_int(j, "beam_size_pass2", d->beam_size_pass2, "decode");
  d->pruning_threshold =
      get_num(j, "pruning_threshold", d->pruning_threshold, "decode");
  d->max_expansion_depth =
      get_int(j, "max_expansion_depth", d->max_expansion_depth, "decode");
  d->eos_threshold = get_num(j, "eos_threshold", d->eos_threshold, "decode");
  d->max_segment_s = get_num(j, "max_segment_s", d->max_segment_s, "decode");
  d->use_vad_filter =
      get_bool(j, "use_vad_filter", d->use_vad_filter, "decode");
  d->vad_energy_threshold =
      get_num(j, "vad_energy_threshold", d->vad_energy_threshold, "decode");
  d->vad_initial_keep_ms =
      get_num(j, "vad_initial_keep_ms", d->vad_initial_keep_ms, "decode");
  *segmenter_vad_ms =
      get_num(j, "segmenter_vad_ms", *segmenter_vad_ms, "decode");
}

// Which checkpoint a table row decodes with.
enum class RowModel { kBase, kSemantic, kPause };

struct TableRowPlan {
  std::string descriptor;  // for parse_segmenter
  RowModel model = RowModel::kBase;
};

TableRowPlan plan_table_row(const std::string& row) {
  TableRowPlan plan;
  auto rest_after = [&](size_t n) -> std::string {
    std::string rest = row.substr(n);
    if (!rest.empty() && rest[0] != ':') {
      throw ValidationError("table row \"" + row + "\" is not recognized");
    }
    return rest;
  };
  if (row.rfind("eos-semantic", 0) == 0) {
    plan.model = RowModel::kSemantic;
    plan.descriptor = "eos" + rest_after(12);
  } else if (row.rfind("eos-pause", 0) == 0) {
    plan.model = RowModel::kPause;
    plan.descriptor = "eos" + rest_after(9);
  } else if (row == "eos" || row.rfind("eos:", 0) == 0) {
    throw ValidationError("table row \"" + row +
                          "\" must name its teacher: eos-semantic or "
                          "eos-pause");
  } else {
    plan.model = RowModel::kBase;
    plan.descriptor = row;
  }
  return plan;
}

std::string row_model_path(const RunPaths& paths, RowModel model) {
  switch (model) {
    case RowModel::kBase:
      return paths.base_model();
    case RowModel::kSemantic:
      return paths.semantic_model(0.0);
    case RowModel::kPause:
      return paths.pause_model();
  }
  throw InternalError("row_model_path: bad model kind");
}

// Biases needing annotations and fine-tuned checkpoints: the ablation
// grid plus bias 0, which the eos-semantic table row decodes with.
std::vector<double> finetune_biases(const ExperimentConfig& config) {
  std::vector<double> biases = config.ablation_biases;
  if (std::find(biases.begin(), biases.end(), 0.0) == biases.end()) {
    biases.push_back(0.0);
    std::sort(biases.begin(), biases.end());
  }
  return biases;
}

AnnotatedTranscript annotate_paragraph(const std::string& paragraph,
                                       const GrammarSpec& grammar) {
  return normalize_to_spoken(
      paragraph,
      disambiguate_terminal(paragraph, grammar.abbreviation_tokens));
}

std::vector<Window> paragraphs_to_windows(
    const std::vector<std::string>& paragraphs, const GrammarSpec& grammar,
    int window, int overlap) {
  std::vector<Window> out;
  for (const auto& paragraph : paragraphs) {
    AnnotatedTranscript t = annotate_paragraph(paragraph, grammar);
    if (t.tokens.empty()) continue;
    std::vector<Window> w = make_windows(t, window, overlap);
    out.insert(out.end(), w.begin(), w.end());
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::string text = read_file(path);
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

BoundaryCause cause_from_name(const std::string& name) {
  if (name == "eos") return BoundaryCause::kEos;
  if (name == "vad") return BoundaryCause::kVad;
  if (name == "fixed") return BoundaryCause::kFixed;
  if (name == "forced") return BoundaryCause::kForced;
  if (name == "end-of-audio") return BoundaryCause::kEndOfAudio;
  throw ValidationError("unknown boundary cause \"" + name + "\"");
}

json optional_to_json(const std::optional<double>& v) {
  if (!v.has_value()) return nullptr;
  return *v;
}

// Manifest bookkeeping for one pipeline run.
struct ManifestBuilder {
  const RunPaths* paths;
  json stages = json::array();

  std::string rel(const std::string& path) const {
    const std::string prefix = paths->root + "/";
    if (path.rfind(prefix, 0) == 0) return path.substr(prefix.size());
    return path;
  }

  json hash_map(const std::vector<std::string>& files) const {
    json m = json::object();
    for (const auto& f : files) {
      m[rel(f)] = fs::exists(f) ? file_hash(f) : "missing";
    }
    return m;
  }

  void record(const std::string& name, const std::vector<std::string>& inputs,
              const std::vector<std::string>& outputs) {
    stages.push_back(json{{"name", name},
                          {"inputs", hash_map(inputs)},
                          {"outputs", hash_map(outputs)}});
  }
};

}  // namespace

std::vector<std::string> make_vocabulary(int n) {
  if (n < 1) throw ValidationError("make_vocabulary: n must be >= 1");
  static const char* kSyllables[] = {"ba", "de", "ki", "lo", "mu", "na",
                                     "po", "ra", "su", "ti", "vo", "ze"};
  const int base = 12;
  std::vector<std::string> words;
  words.reserve(n);
  for (int i = 0; i < n; ++i) {
    std::string w;
    if (i < base * base) {
      w = std::string(kSyllables[i % base]) + kSyllables[(i / base) % base];
    } else {
      int k = i - base * base;
      w = std::string(kSyllables[k % base]) + kSyllables[(k / base) % base] +
          kSyllables[(k / (base * base)) % base];
    }
    words.push_back(std::move(w));
  }
  return words;
}

void ExperimentConfig::validate() const {
  grammar.validate();
  utterance.validate();
  eval_grammar.validate();
  eval_utterance.validate();
  teacher.validate();
  transducer.validate();
  finetune.validate();
  decode.validate();
  if (corpus.n_train_paragraphs < 1 || corpus.n_heldout_paragraphs < 1 ||
      corpus.n_train_utterances < 1 || corpus.n_eval_utterances < 1) {
    throw ValidationError("config: corpus sizes must be >= 1");
  }
  if (pause_silence_threshold_ms <= 0) {
    throw ValidationError(
        "config: pause_teacher.silence_threshold_ms must be > 0");
  }
  if (segmenter_vad_ms <= 0) {
    throw ValidationError("config: decode.segmenter_vad_ms must be > 0");
  }
  if (table_rows.empty()) {
    throw ValidationError("config: table.segmenters must be non-empty");
  }
  for (const auto& row : table_rows) {
    TableRowPlan plan = plan_table_row(row);
    parse_segmenter(plan.descriptor, segmenter_vad_ms, decode.eos_threshold);
  }
  if (table_modes.empty()) {
    throw ValidationError("config: table.modes must be non-empty");
  }
  for (size_t i = 0; i < table_modes.size(); ++i) {
    if (table_modes[i] < 1 || table_modes[i] > 3) {
      throw ValidationError("config: table.modes entries must be 1, 2 or 3");
    }
    if (i > 0 && table_modes[i] <= table_modes[i - 1]) {
      throw ValidationError("config: table.modes must be strictly increasing");
    }
  }
  auto check_grid = [](const std::vector<double>& grid, const char* name,
                       bool nonnegative) {
    if (grid.empty()) {
      throw ValidationError(std::string("config: ") + name +
                            " must be non-empty");
    }
    for (size_t i = 0; i < grid.size(); ++i) {
      if (!std::isfinite(grid[i])) {
        throw ValidationError(std::string("config: ") + name +
                              " entries must be finite");
      }
      if (nonnegative && grid[i] < 0) {
        throw ValidationError(std::string("config: ") + name +
                              " entries must be >= 0");
      }
      if (i > 0 && grid[i] <= grid[i - 1]) {
        throw ValidationError(std::string("config: ") + name +
                              " must be strictly increasing");
      }
    }
  };
  check_grid(ablation_biases, "ablation.biases", false);
  check_grid(ablation_thresholds, "ablation.thresholds", true);
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.grammar.vocabulary = make_vocabulary(32);
  c.grammar.abbreviation_tokens = {"inc.", "ltd."};
  c.eval_grammar = c.grammar;
  c.eval_grammar.sentence_len_min = 4;
  c.eval_grammar.sentence_len_max = 8;
  c.eval_utterance = c.utterance;
  c.eval_utterance.hesitation_prob = 0.3;
  c.eval_utterance.hesitation_ms_min = 600;
  c.eval_utterance.hesitation_ms_max = 600;
  c.finetune = c.transducer;
  c.finetune.learning_rate = 0.05;
  c.finetune.epochs = 10;
  return c;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  check_keys(j, "config",
             {"seed", "grammar", "utterance", "corpus", "teacher",
              "pause_teacher", "transducer", "decode", "table", "ablation"});
  ExperimentConfig c = default_experiment_config();
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_unsigned()) {
      throw ValidationError("config.seed: expected a non-negative integer");
    }
    c.seed = s.get<uint64_t>();
  }
  if (j.contains("grammar")) parse_grammar(j.at("grammar"), &c.grammar);
  if (j.contains("utterance")) parse_utterance(j.at("utterance"), &c.utterance);
  // The eval specs start as copies of the (possibly overridden) base
  // specs; the corpus.eval block then adjusts them.
  c.eval_grammar = c.grammar;
  c.eval_grammar.sentence_len_min = 4;
  c.eval_grammar.sentence_len_max = 8;
  c.eval_utterance = c.utterance;
  c.eval_utterance.hesitation_prob = 0.3;
  c.eval_utterance.hesitation_ms_min = 600;
  c.eval_utterance.hesitation_ms_max = 600;
  if (j.contains("corpus")) parse_corpus(j.at("corpus"), &c);
  if (j.contains("teacher")) parse_teacher(j.at("teacher"), &c.teacher);
  if (j.contains("pause_teacher")) {
    check_keys(j.at("pause_teacher"), "pause_teacher",
               {"silence_threshold_ms"});
    c.pause_silence_threshold_ms =
        get_num(j.at("pause_teacher"), "silence_threshold_ms",
                c.pause_silence_threshold_ms, "pause_teacher");
  }
  if (j.contains("transducer")) {
    parse_transducer(j.at("transducer"), &c.transducer, &c.finetune);
  } else {
    c.finetune = c.transducer;
    c.finetune.learning_rate = 0.05;
    c.finetune.epochs = 10;
  }
  if (j.contains("decode")) {
    parse_decode(j.at("decode"), &c.decode, &c.segmenter_vad_ms);
  }
  if (j.contains("table")) {
    const json& t = j.at("table");
    check_keys(t, "table", {"segmenters", "modes"});
    if (t.contains("segmenters")) {
      c.table_rows = get_string_array(t.at("segmenters"), "table.segmenters");
    }
    if (t.contains("modes")) {
      std::vector<double> modes =
          get_number_array(t.at("modes"), "table.modes");
      c.table_modes.clear();
      for (double m : modes) c.table_modes.push_back(static_cast<int>(m));
    }
  }
  if (j.contains("ablation")) {
    const json& a = j.at("ablation");
    check_keys(a, "ablation", {"biases", "thresholds"});
    if (a.contains("biases")) {
      c.ablation_biases = get_number_array(a.at("biases"), "ablation.biases");
    }
    if (a.contains("thresholds")) {
      c.ablation_thresholds =
          get_number_array(a.at("thresholds"), "ablation.thresholds");
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_file(path));
}

std::string experiment_config_json(const ExperimentConfig& config) {
  json grammar{{"vocabulary", config.grammar.vocabulary},
               {"sentence_len_min", config.grammar.sentence_len_min},
               {"sentence_len_max", config.grammar.sentence_len_max},
               {"terminal_punct_weights", config.grammar.terminal_punct_weights},
               {"internal_punct_prob", config.grammar.internal_punct_prob},
               {"abbreviation_tokens", config.grammar.abbreviation_tokens}};
  auto utt_json = [](const UtteranceSpec& u) {
    return json{{"n_sentences", u.n_sentences},
                {"hesitation_prob", u.hesitation_prob},
                {"hesitation_ms_min", u.hesitation_ms_min},
                {"hesitation_ms_max", u.hesitation_ms_max},
                {"inter_sentence_pause_ms_min", u.inter_sentence_pause_ms_min},
                {"inter_sentence_pause_ms_max", u.inter_sentence_pause_ms_max},
                {"intra_word_gap_ms", u.intra_word_gap_ms},
                {"word_duration_ms_min", u.word_duration_ms_min},
                {"word_duration_ms_max", u.word_duration_ms_max},
                {"noise_std", u.noise_std},
                {"frame_ms", u.frame_ms},
                {"feature_dim", u.feature_dim}};
  };
  json corpus{{"n_train_paragraphs", config.corpus.n_train_paragraphs},
              {"n_heldout_paragraphs", config.corpus.n_heldout_paragraphs},
              {"n_train_utterances", config.corpus.n_train_utterances},
              {"n_eval_utterances", config.corpus.n_eval_utterances},
              {"eval",
               json{{"n_sentences", config.eval_utterance.n_sentences},
                    {"hesitation_prob", config.eval_utterance.hesitation_prob},
                    {"hesitation_ms_min",
                     config.eval_utterance.hesitation_ms_min},
                    {"hesitation_ms_max",
                     config.eval_utterance.hesitation_ms_max},
                    {"inter_sentence_pause_ms_min",
                     config.eval_utterance.inter_sentence_pause_ms_min},
                    {"inter_sentence_pause_ms_max",
                     config.eval_utterance.inter_sentence_pause_ms_max},
                    {"sentence_len_min", config.eval_grammar.sentence_len_min},
                    {"sentence_len_max",
                     config.eval_grammar.sentence_len_max}}}};
  json teacher{{"embed_dim", config.teacher.embed_dim},
               {"hidden_dim", config.teacher.hidden_dim},
               {"dec_dim", config.teacher.dec_dim},
               {"learning_rate", config.teacher.learning_rate},
               {"epochs", config.teacher.epochs},
               {"batch_size", config.teacher.batch_size},
               {"grad_clip_norm", config.teacher.grad_clip_norm},
               {"window", config.teacher.window},
               {"overlap", config.teacher.overlap}};
  json transducer{{"hidden_dim", config.transducer.hidden_dim},
                  {"pred_dim", config.transducer.pred_dim},
                  {"right_context", config.transducer.right_context},
                  {"learning_rate", config.transducer.learning_rate},
                  {"epochs", config.transducer.epochs},
                  {"batch_size", config.transducer.batch_size},
                  {"grad_clip_norm", config.transducer.grad_clip_norm},
                  {"fastemit_lambda", config.transducer.fastemit_lambda},
                  {"finetune_learning_rate", config.finetune.learning_rate},
                  {"finetune_epochs", config.finetune.epochs},
                  {"finetune_fastemit_lambda",
                   config.finetune.fastemit_lambda}};
  json decode{{"beam_size_pass1", config.decode.beam_size_pass1},
              {"beam_size_pass2", config.decode.beam_size_pass2},
              {"pruning_threshold", config.decode.pruning_threshold},
              {"max_expansion_depth", config.decode.max_expansion_depth},
              {"eos_threshold", config.decode.eos_threshold},
              {"max_segment_s", config.decode.max_segment_s},
              {"use_vad_filter", config.decode.use_vad_filter},
              {"vad_energy_threshold", config.decode.vad_energy_threshold},
              {"vad_initial_keep_ms", config.decode.vad_initial_keep_ms},
              {"segmenter_vad_ms", config.segmenter_vad_ms}};
  json root{{"seed", config.seed},
            {"grammar", grammar},
            {"utterance", utt_json(config.utterance)},
            {"corpus", corpus},
            {"teacher", teacher},
            {"pause_teacher",
             json{{"silence_threshold_ms", config.pause_silence_threshold_ms}}},
            {"transducer", transducer},
            {"decode", decode},
            {"table",
             json{{"segmenters", config.table_rows},
                  {"modes", config.table_modes}}},
            {"ablation",
             json{{"biases", config.ablation_biases},
                  {"thresholds", config.ablation_thresholds}}}};
  return root.dump(2) + "\n";
}

std::string bias_tag(double bias) {
  std::string tag = bias < 0 ? "m" : "p";
  tag += fmt_trim(std::fabs(bias));
  std::replace(tag.begin(), tag.end(), '.', '_');
  return tag;
}

std::string RunPaths::config_copy() const { return root + "/config.json"; }
std::string RunPaths::train_paragraphs() const {
  return root + "/corpus/train_paragraphs.txt";
}
std::string RunPaths::heldout_paragraphs() const {
  return root + "/corpus/heldout_paragraphs.txt";
}
std::string RunPaths::train_corpus() const {
  return root + "/corpus/train.jsonl";
}
std::string RunPaths::eval_corpus() const { return root + "/corpus/eval.jsonl"; }
std::string RunPaths::teacher_model() const {
  return root + "/models/teacher.json";
}
std::string RunPaths::teacher_eval_report() const {
  return root + "/reports/teacher_eval.json";
}
std::string RunPaths::semantic_annotations(double bias) const {
  return root + "/annotations/semantic_" + bias_tag(bias) + ".jsonl";
}
std::string RunPaths::pause_annotations() const {
  return root + "/annotations/pause.jsonl";
}
std::string RunPaths::base_model() const { return root + "/models/base.json"; }
std::string RunPaths::semantic_model(double bias) const {
  return root + "/models/eos_semantic_" + bias_tag(bias) + ".json";
}
std::string RunPaths::pause_model() const {
  return root + "/models/eos_pause.json";
}
std::string RunPaths::table_csv() const { return root + "/reports/table.csv"; }
std::string RunPaths::table_manifest() const {
  return root + "/reports/table_manifest.json";
}
std::string RunPaths::ablation_csv() const {
  return root + "/reports/ablation.csv";
}
std::string RunPaths::ablation_argmin_csv() const {
  return root + "/reports/ablation_argmin.csv";
}
std::string RunPaths::ablation_svg() const {
  return root + "/reports/ablation.svg";
}
std::string RunPaths::manifest() const { return root + "/manifest.json"; }

void stage_gen(const ExperimentConfig& config, const RunPaths& paths) {
  GrammarSpec g = config.grammar;
  g.seed = mix_seed(config.seed, kStreamWrittenTrain);
  std::vector<std::string> train =
      gen_written_corpus(g, config.corpus.n_train_paragraphs);
  g.seed = mix_seed(config.seed, kStreamWrittenHeldout);
  std::vector<std::string> heldout =
      gen_written_corpus(g, config.corpus.n_heldout_paragraphs);
  auto join_lines = [](const std::vector<std::string>& lines) {
    std::string text;
    for (const auto& l : lines) {
      text += l;
      text += '\n';
    }
    return text;
  };
  write_file(paths.train_paragraphs(), join_lines(train));
  write_file(paths.heldout_paragraphs(), join_lines(heldout));

  GrammarSpec sg = config.grammar;
  sg.seed = mix_seed(config.seed, kStreamSpokenTrainGrammar);
  UtteranceSpec su = config.utterance;
  su.seed = mix_seed(config.seed, kStreamSpokenTrainUtt);
  fs::create_directories(fs::path(paths.train_corpus()).parent_path());
  write_corpus_jsonl(paths.train_corpus(),
                     gen_spoken_corpus(sg, su, config.corpus.n_train_utterances));

  GrammarSpec eg = config.eval_grammar;
  eg.seed = mix_seed(config.seed, kStreamSpokenEvalGrammar);
  UtteranceSpec eu = config.eval_utterance;
  eu.seed = mix_seed(config.seed, kStreamSpokenEvalUtt);
  write_corpus_jsonl(paths.eval_corpus(),
                     gen_spoken_corpus(eg, eu, config.corpus.n_eval_utterances));
}

TeacherEval stage_teach_train(const ExperimentConfig& config,
                              const RunPaths& paths) {
  std::vector<Window> train = paragraphs_to_windows(
      read_lines(paths.train_paragraphs()), config.grammar,
      config.teacher.window, config.teacher.overlap);
  std::vector<Window> heldout = paragraphs_to_windows(
      read_lines(paths.heldout_paragraphs()), config.grammar,
      config.teacher.window, config.teacher.overlap);
  TeacherHyper hyper = config.teacher;
  hyper.seed = mix_seed(config.seed, kStreamTeacher);
  TeacherParams teacher = teacher_train(train, hyper);
  fs::create_directories(fs::path(paths.teacher_model()).parent_path());
  save_teacher(paths.teacher_model(), teacher);
  TeacherEval eval = teacher_eval(teacher, heldout);
  json report{{"label_accuracy", eval.label_accuracy},
              {"full_sequence_accuracy", eval.full_sequence_accuracy},
              {"f1", eval.f1},
              {"final_train_loss", teacher.final_train_loss},
              {"n_train_windows", train.size()},
              {"n_heldout_windows", heldout.size()}};
  write_file(paths.teacher_eval_report(), report.dump(2) + "\n");
  return eval;
}

void stage_annotate(const ExperimentConfig& config, const RunPaths& paths) {
  TeacherParams teacher = load_teacher(paths.teacher_model());
  std::vector<SpokenUtterance> corpus = read_corpus_jsonl(paths.train_corpus());
  for (double bias : finetune_biases(config)) {
    std::vector<std::vector<uint8_t>> labels;
    labels.reserve(corpus.size());
    for (const auto& utt : corpus) {
      labels.push_back(teacher_predict(teacher, utt.tokens, bias));
    }
    write_labels_jsonl(paths.semantic_annotations(bias), labels);
  }
  std::vector<std::vector<uint8_t>> pause;
  pause.reserve(corpus.size());
  for (const auto& utt : corpus) {
    pause.push_back(pause_teacher_annotate(utt.tokens, utt.alignment,
                                           utt.frames,
                                           config.pause_silence_threshold_ms));
  }
  write_labels_jsonl(paths.pause_annotations(), pause);
}

void stage_train_base(const ExperimentConfig& config, const RunPaths& paths) {
  std::vector<SpokenUtterance> corpus = read_corpus_jsonl(paths.train_corpus());
  RnntHyper hyper = config.transducer;
  hyper.seed = mix_seed(config.seed, kStreamBase);
  RnntParams base =
      train_base(corpus, spoken_vocabulary(config.grammar), hyper);
  fs::create_directories(fs::path(paths.base_model()).parent_path());
  save_rnnt(paths.base_model(), base);
}

void stage_finetune(const ExperimentConfig& config, const RunPaths& paths) {
  RnntParams base = load_rnnt(paths.base_model());
  std::vector<SpokenUtterance> corpus = read_corpus_jsonl(paths.train_corpus());
  RnntHyper hyper = config.finetune;
  hyper.seed = mix_seed(config.seed, kStreamFinetune);
  for (double bias : finetune_biases(config)) {
    std::vector<std::vector<uint8_t>> labels =
        read_labels_jsonl(paths.semantic_annotations(bias));
    save_rnnt(paths.semantic_model(bias),
              finetune_eos(base, corpus, labels, hyper));
  }
  std::vector<std::vector<uint8_t>> pause =
      read_labels_jsonl(paths.pause_annotations());
  save_rnnt(paths.pause_model(), finetune_eos(base, corpus, pause, hyper));
}

MetricsReport pool_metrics(const std::vector<SegmentationOutput>& outputs,
                           const std::vector<SpokenUtterance>& corpus) {
  if (outputs.size() != corpus.size()) {
    throw ValidationError("pool_metrics: outputs and corpus sizes differ");
  }
  MetricsReport report;
  long long errors = 0, n_ref = 0;
  std::vector<double> lengths, latencies;
  size_t tp = 0, n_pred = 0, n_refpos = 0;
  for (size_t i = 0; i < outputs.size(); ++i) {
    std::vector<std::string> hyp;
    for (const auto& seg : outputs[i].segments) {
      hyp.insert(hyp.end(), seg.tokens.begin(), seg.tokens.end());
    }
    WerResult w = wer(corpus[i].tokens, hyp);
    report.substitutions += w.substitutions;
    report.deletions += w.deletions;
    report.insertions += w.insertions;
    errors += w.substitutions + w.deletions + w.insertions;
    n_ref += w.n_ref;

    std::vector<double> sl = segment_lengths(outputs[i]);
    lengths.insert(lengths.end(), sl.begin(), sl.end());
    report.n_segments += static_cast<int>(outputs[i].segments.size());
    for (const EosLatency& lat :
         eos_latencies(outputs[i], corpus[i].alignment)) {
      latencies.push_back(lat.ms);
    }
    std::set<int> pred =
        boundary_token_positions(outputs[i], corpus[i].alignment);
    std::vector<int> inter;
    std::set_intersection(pred.begin(), pred.end(),
                          corpus[i].eos_after.begin(),
                          corpus[i].eos_after.end(),
                          std::back_inserter(inter));
    tp += inter.size();
    n_pred += pred.size();
    n_refpos += corpus[i].eos_after.size();
  }
  report.wer = static_cast<double>(errors) / std::max(1LL, n_ref);
  report.sl50 = percentile(lengths, 50);
  report.sl90 = percentile(lengths, 90);
  report.eos50 = percentile(latencies, 50);
  report.eos90 = percentile(latencies, 90);
  if (n_pred == 0 && n_refpos == 0) {
    report.precision = report.recall = report.f1 = 1.0;
  } else if (tp > 0) {
    report.precision = static_cast<double>(tp) / n_pred;
    report.recall = static_cast<double>(tp) / n_refpos;
    report.f1 = 2.0 * report.precision * report.recall /
                (report.precision + report.recall);
  }
  return report;
}

MetricsReport evaluate_corpus(const RnntParams& model,
                              const std::vector<SpokenUtterance>& corpus,
                              const DecodeConfig& decode,
                              std::vector<SegmentationOutput>* outputs) {
  std::vector<SegmentationOutput> local;
  local.reserve(corpus.size());
  for (const auto& utt : corpus) {
    local.push_back(decode_stream(model, utt.frames, decode));
  }
  MetricsReport report = pool_metrics(local, corpus);
  if (outputs != nullptr) *outputs = std::move(local);
  return report;
}

TableReport run_table(const ExperimentConfig& config, const RunPaths& paths) {
  std::vector<SpokenUtterance> eval = read_corpus_jsonl(paths.eval_corpus());
  std::map<std::string, RnntParams> model_cache;
  TableReport report;
  json errors = json::array();

  for (const auto& row : config.table_rows) {
    TableRowResult result;
    result.segmenter = row;
    try {
      TableRowPlan plan = plan_table_row(row);
      SegmenterStrategy strategy = parse_segmenter(
          plan.descriptor, config.segmenter_vad_ms, config.decode.eos_threshold);
      const std::string model_path = row_model_path(paths, plan.model);
      auto it = model_cache.find(model_path);
      if (it == model_cache.end()) {
        it = model_cache.emplace(model_path, load_rnnt(model_path)).first;
      }
      for (int mode : config.table_modes) {
        DecodeConfig d = config.decode;
        d.mode = mode;
        d.segmenter = strategy;
        result.by_mode[mode - 1] = evaluate_corpus(it->second, eval, d);
      }
    } catch (const std::exception& e) {
      result.by_mode = {};
      result.error = e.what();
      errors.push_back(json{{"row", row}, {"error", result.error}});
    }
    report.rows.push_back(std::move(result));
  }

  // The SL and EOS columns describe segmentation, which mode choice
  // does not alter for a given strategy; they are taken from the
  // lowest requested mode.
  const int metrics_mode = config.table_modes.front();
  std::ostringstream csv;
  csv << "segmenter,SL50,SL90,EOS50,EOS90,WER_mode1,WER_mode2,WER_mode3\n";
  auto opt_cell = [](const std::optional<double>& v, int decimals) {
    return v.has_value() ? fmt_fixed(*v, decimals) : std::string("-");
  };
  for (const auto& row : report.rows) {
    const std::optional<MetricsReport>& head = row.by_mode[metrics_mode - 1];
    csv << csv_field(row.segmenter);
    if (head.has_value()) {
      csv << ',' << opt_cell(head->sl50, 2) << ',' << opt_cell(head->sl90, 2)
          << ',' << opt_cell(head->eos50, 1) << ','
          << opt_cell(head->eos90, 1);
    } else {
      csv << ",-,-,-,-";
    }
    for (int mode = 1; mode <= 3; ++mode) {
      const std::optional<MetricsReport>& cell = row.by_mode[mode - 1];
      csv << ',' << (cell.has_value() ? fmt_fixed(cell->wer, 4) : "-");
    }
    csv << '\n';
  }
  report.csv = csv.str();
  write_file(paths.table_csv(), report.csv);

  json checkpoints = json::object();
  for (const auto& [path, model] : model_cache) {
    (void)model;
    std::string rel = path.rfind(paths.root + "/", 0) == 0
                          ? path.substr(paths.root.size() + 1)
                          : path;
    checkpoints[rel] = file_hash(path);
  }
  json manifest{{"kind", "table-manifest"},
                {"config_hash", fnv1a64_hex(experiment_config_json(config))},
                {"seed", config.seed},
                {"rows", config.table_rows},
                {"modes", config.table_modes},
                {"checkpoints", checkpoints},
                {"errors", errors},
                {"csv_hash", fnv1a64_hex(report.csv)}};
  write_file(paths.table_manifest(), manifest.dump(2) + "\n");
  return report;
}

AblationReport run_ablation(const ExperimentConfig& config,
                            const RunPaths& paths) {
  std::vector<SpokenUtterance> eval = read_corpus_jsonl(paths.eval_corpus());
  AblationReport report;
  for (double bias : config.ablation_biases) {
    RnntParams model;
    try {
      model = load_rnnt(paths.semantic_model(bias));
    } catch (const std::exception& e) {
      report.warnings.push_back("bias " + fmt_trim(bias) +
                                " line omitted: " + e.what());
      continue;
    }
    AblationArgmin best;
    bool have_best = false;
    for (double threshold : config.ablation_thresholds) {
      DecodeConfig d = config.decode;
      d.mode = 1;
      d.segmenter.kind = SegmenterStrategy::Kind::kEos;
      d.segmenter.eos_threshold = threshold;
      MetricsReport m = evaluate_corpus(model, eval, d);
      report.points.push_back({bias, threshold, m.wer});
      // Thresholds ascend, so a strict comparison leaves ties at the
      // lowest threshold.
      if (!have_best || m.wer < best.wer) {
        best = {bias, threshold, m.wer};
        have_best = true;
      }
    }
    report.argmins.push_back(best);
  }

  std::ostringstream csv;
  csv << "bias,threshold,wer\n";
  for (const auto& p : report.points) {
    csv << fmt_trim(p.bias) << ',' << fmt_trim(p.threshold) << ','
        << fmt_fixed(p.wer, 4) << '\n';
  }
  report.csv = csv.str();
  write_file(paths.ablation_csv(), report.csv);

  std::ostringstream argmin_csv;
  argmin_csv << "bias,argmin_threshold,wer\n";
  for (const auto& a : report.argmins) {
    argmin_csv << fmt_trim(a.bias) << ',' << fmt_trim(a.threshold) << ','
               << fmt_fixed(a.wer, 4) << '\n';
  }
  write_file(paths.ablation_argmin_csv(), argmin_csv.str());
  write_file(paths.ablation_svg(), ablation_svg_from_csv(report.csv));
  return report;
}

std::string ablation_svg_from_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line) || line != "bias,threshold,wer") {
    throw ValidationError("ablation_svg_from_csv: bad header");
  }
  // One series per bias, in first-appearance order.
  std::vector<std::string> series_labels;
  std::vector<std::vector<std::pair<double, double>>> series;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t c1 = line.find(',');
    size_t c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw ValidationError("ablation_svg_from_csv: bad row \"" + line + "\"");
    }
    std::string bias = line.substr(0, c1);
    double x = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    double y = std::stod(line.substr(c2 + 1));
    size_t idx = 0;
    for (; idx < series_labels.size(); ++idx) {
      if (series_labels[idx] == bias) break;
    }
    if (idx == series_labels.size()) {
      series_labels.push_back(bias);
      series.emplace_back();
    }
    series[idx].push_back({x, y});
  }
  if (series.empty()) {
    throw ValidationError("ablation_svg_from_csv: no data rows");
  }

  double xmin = series[0][0].first, xmax = xmin;
  double ymin = series[0][0].second, ymax = ymin;
  for (const auto& s : series) {
    for (const auto& [x, y] : s) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax <= xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax <= ymin) {
    ymin -= 0.01;
    ymax += 0.01;
  }
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double W = 640, H = 420, L = 70, R = 150, T = 40, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return T + ph - (y - ymin) / (ymax - ymin) * ph; };
  auto num = [](double v) { return fmt_fixed(v, 1); };
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
      << "\">\n";
  svg << "  <rect width=\"" << W << "\" height=\"" << H
      << "\" fill=\"white\"/>\n";
  svg << "  <text x=\"" << num(L) << "\" y=\"24\" font-family=\"sans-serif\""
      << " font-size=\"15\">WER by EOS cost threshold</text>\n";
  // Axes.
  svg << "  <line x1=\"" << num(L) << "\" y1=\"" << num(T + ph) << "\" x2=\""
      << num(L + pw) << "\" y2=\"" << num(T + ph)
      << "\" stroke=\"black\"/>\n";
  svg << "  <line x1=\"" << num(L) << "\" y1=\"" << num(T) << "\" x2=\""
      << num(L) << "\" y2=\"" << num(T + ph) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double fx = xmin + (xmax - xmin) * i / 4.0;
    double fy = ymin + (ymax - ymin) * i / 4.0;
    svg << "  <line x1=\"" << num(px(fx)) << "\" y1=\"" << num(T + ph)
        << "\" x2=\"" << num(px(fx)) << "\" y2=\"" << num(T + ph + 5)
        << "\" stroke=\"black\"/>\n";
    svg << "  <text x=\"" << num(px(fx)) << "\" y=\"" << num(T + ph + 20)
        << "\" font-family=\"sans-serif\" font-size=\"11\""
        << " text-anchor=\"middle\">" << fmt_trim(fx) << "</text>\n";
    svg << "  <line x1=\"" << num(L - 5) << "\" y1=\"" << num(py(fy))
        << "\" x2=\"" << num(L) << "\" y2=\"" << num(py(fy))
        << "\" stroke=\"black\"/>\n";
    svg << "  <text x=\"" << num(L - 8) << "\" y=\"" << num(py(fy) + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\""
        << " text-anchor=\"end\">" << fmt_fixed(fy, 3) << "</text>\n";
  }
  svg << "  <text x=\"" << num(L + pw / 2) << "\" y=\"" << num(H - 12)
      << "\" font-family=\"sans-serif\" font-size=\"13\""
      << " text-anchor=\"middle\">EOS cost threshold</text>\n";
  svg << "  <text x=\"18\" y=\"" << num(T + ph / 2)
      << "\" font-family=\"sans-serif\" font-size=\"13\""
      << " text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << num(T + ph / 2) << ")\">WER</text>\n";
  // Series.
  for (size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % 6];
    if (series[s].size() > 1) {
      svg << "  <polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"2\" points=\"";
      for (size_t i = 0; i < series[s].size(); ++i) {
        if (i > 0) svg << ' ';
        svg << num(px(series[s][i].first)) << ','
            << num(py(series[s][i].second));
      }
      svg << "\"/>\n";
    }
    for (const auto& [x, y] : series[s]) {
      svg << "  <circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    double ly = T + 10 + 18.0 * s;
    svg << "  <line x1=\"" << num(L + pw + 14) << "\" y1=\"" << num(ly)
        << "\" x2=\"" << num(L + pw + 34) << "\" y2=\"" << num(ly)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "  <text x=\"" << num(L + pw + 40) << "\" y=\"" << num(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">bias "
        << series_labels[s] << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void run_e2e_pipeline(const ExperimentConfig& config,
                      const std::string& out_dir, bool force,
                      std::ostream* progress) {
  config.validate();
  if (fs::exists(out_dir) && !force) {
    throw ValidationError("output directory " + out_dir +
                          " already exists (pass --force to overwrite)");
  }
  fs::create_directories(out_dir);
  RunPaths paths(out_dir);
  write_file(paths.config_copy(), experiment_config_json(config));

  ManifestBuilder manifest;
  manifest.paths = &paths;
  auto run_stage = [&](const std::string& name,
                       const std::vector<std::string>& inputs,
                       const std::vector<std::string>& outputs,
                       const std::function<void()>& body) {
    if (progress != nullptr) *progress << "[" << name << "] ..." << std::flush;
    auto started = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const std::exception& e) {
      if (progress != nullptr) *progress << " failed\n";
      json doc{{"kind", "run-manifest"},
               {"config_hash", fnv1a64_hex(experiment_config_json(config))},
               {"seed", config.seed},
               {"failed_stage", name},
               {"stages", manifest.stages}};
      write_file(paths.manifest(), doc.dump(2) + "\n");
      throw StageError(name, e.what());
    }
    manifest.record(name, inputs, outputs);
    if (progress != nullptr) {
      double s = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - started)
                     .count();
      *progress << " done (" << fmt_fixed(s, 1) << " s)\n";
    }
  };

  std::vector<std::string> semantic_ann, semantic_models;
  for (double b : finetune_biases(config)) {
    semantic_ann.push_back(paths.semantic_annotations(b));
    semantic_models.push_back(paths.semantic_model(b));
  }

  run_stage("gen", {paths.config_copy()},
            {paths.train_paragraphs(), paths.heldout_paragraphs(),
             paths.train_corpus(), paths.eval_corpus()},
            [&] { stage_gen(config, paths); });
  run_stage("teach-train",
            {paths.train_paragraphs(), paths.heldout_paragraphs()},
            {paths.teacher_model(), paths.teacher_eval_report()},
            [&] { stage_teach_train(config, paths); });
  {
    std::vector<std::string> outputs = semantic_ann;
    outputs.push_back(paths.pause_annotations());
    run_stage("annotate", {paths.teacher_model(), paths.train_corpus()},
              outputs, [&] { stage_annotate(config, paths); });
  }
  run_stage("train-base", {paths.train_corpus()}, {paths.base_model()},
            [&] { stage_train_base(config, paths); });
  {
    std::vector<std::string> inputs = semantic_ann;
    inputs.push_back(paths.pause_annotations());
    inputs.push_back(paths.base_model());
    inputs.push_back(paths.train_corpus());
    std::vector<std::string> outputs = semantic_models;
    outputs.push_back(paths.pause_model());
    run_stage("finetune", inputs, outputs,
              [&] { stage_finetune(config, paths); });
  }
  run_stage("table",
            {paths.eval_corpus(), paths.base_model(),
             paths.semantic_model(0.0), paths.pause_model()},
            {paths.table_csv(), paths.table_manifest()},
            [&] { run_table(config, paths); });
  {
    std::vector<std::string> inputs = semantic_models;
    inputs.push_back(paths.eval_corpus());
    run_stage("ablation", inputs,
              {paths.ablation_csv(), paths.ablation_argmin_csv(),
               paths.ablation_svg()},
              [&] { run_ablation(config, paths); });
  }

  json doc{{"kind", "run-manifest"},
           {"config_hash", fnv1a64_hex(experiment_config_json(config))},
           {"seed", config.seed},
           {"stages", manifest.stages}};
  write_file(paths.manifest(), doc.dump(2) + "\n");
}

void write_decodes_jsonl(const std::string& path,
                         const std::vector<SegmentationOutput>& outputs) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("write_decodes_jsonl: cannot open " + path);
  for (const auto& o : outputs) {
    json segments = json::array();
    for (const auto& seg : o.segments) {
      segments.push_back(
          json{{"tokens", seg.tokens},
               {"boundary_frame", seg.boundary_frame},
               {"eos_emission_frame", seg.eos_emission_frame},
               {"boundary_ms", seg.boundary_frame * o.frame_ms},
               {"eos_emission_ms", seg.eos_emission_frame * o.frame_ms},
               {"cause", cause_name(seg.cause)}});
    }
    json events = json::array();
    for (const auto& ev : o.events) {
      events.push_back(json{{"decision_frame", ev.decision_frame},
                            {"emission_frame", ev.emission_frame},
                            {"cause", cause_name(ev.cause)}});
    }
    out << json{{"frame_ms", o.frame_ms},
                {"total_frames", o.total_frames},
                {"segments", segments},
                {"events", events}}
               .dump()
        << "\n";
  }
}

std::vector<SegmentationOutput> read_decodes_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("read_decodes_jsonl: cannot open " + path);
  std::vector<SegmentationOutput> outputs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    SegmentationOutput o;
    o.frame_ms = j.at("frame_ms").get<double>();
    o.total_frames = j.at("total_frames").get<int>();
    for (const auto& js : j.at("segments")) {
      Segment seg;
      seg.tokens = js.at("tokens").get<std::vector<std::string>>();
      seg.boundary_frame = js.at("boundary_frame").get<int>();
      seg.eos_emission_frame = js.at("eos_emission_frame").get<int>();
      seg.cause = cause_from_name(js.at("cause").get<std::string>());
      o.segments.push_back(std::move(seg));
    }
    for (const auto& je : j.at("events")) {
      BoundaryEvent ev;
      ev.decision_frame = je.at("decision_frame").get<int>();
      ev.emission_frame = je.at("emission_frame").get<int>();
      ev.cause = cause_from_name(je.at("cause").get<std::string>());
      o.events.push_back(ev);
    }
    outputs.push_back(std::move(o));
  }
  return outputs;
}

void write_labels_jsonl(const std::string& path,
                        const std::vector<std::vector<uint8_t>>& labels) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("write_labels_jsonl: cannot open " + path);
  for (const auto& row : labels) {
    json j{{"labels", std::vector<int>(row.begin(), row.end())}};
    out << j.dump() << "\n";
  }
}

std::vector<std::vector<uint8_t>> read_labels_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("read_labels_jsonl: cannot open " + path);
  std::vector<std::vector<uint8_t>> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    std::vector<int> row = j.at("labels").get<std::vector<int>>();
    labels.emplace_back(row.begin(), row.end());
  }
  return labels;
}

std::string metrics_report_json(const MetricsReport& report) {
  json j{{"wer", report.wer},
         {"substitutions", report.substitutions},
         {"deletions", report.deletions},
         {"insertions", report.insertions},
         {"sl50", optional_to_json(report.sl50)},
         {"sl90", optional_to_json(report.sl90)},
         {"eos50", optional_to_json(report.eos50)},
         {"eos90", optional_to_json(report.eos90)},
         {"precision", report.precision},
         {"recall", report.recall},
         {"f1", report.f1},
         {"n_segments", report.n_segments}};
  return j.dump(2) + "\n";
}

}  // namespace segstream
