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

#include "segstream/corpus.hh"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace segstream {

namespace {

using nlohmann::json;

// RNG stream tags so text, timing, and noise draws stay independent.
constexpr uint64_t kWrittenStream = 0x7772697474656eULL;
constexpr uint64_t kSpokenTextStream = 0x73706f6b656eULL;
constexpr uint64_t kTimingStream = 0x74696d696e67ULL;
constexpr uint64_t kNoiseStream = 0x6e6f697365ULL;

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string normalized_form(const std::string& word) {
  std::string out;
  for (char c : word) {
    if (kPunctChars.find(c) == std::string::npos) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

// One sentence drawn from the grammar, kept in a form that can be
// rendered either as written text or as spoken tokens.
struct SentenceDraw {
  std::vector<std::string> words;  // surface forms, e.g. "inc."
  std::string terminal;            // one of . ? !
  std::vector<bool> comma_after;   // per word, never on the final word
};

std::string sample_terminal(const GrammarSpec& g, Rng* rng) {
  double r = rng->uniform();
  double acc = 0.0;
  std::string last;
  for (const auto& [mark, w] : g.terminal_punct_weights) {
    acc += w;
    last = mark;
    if (r < acc) return mark;
  }
  return last;
}

SentenceDraw draw_sentence(const GrammarSpec& g, Rng* rng) {
  const int n_final = g.n_final_words();
  const int n_body = static_cast<int>(g.vocabulary.size()) - n_final;
  // Body positions draw from the non-final words plus abbreviations.
  const int body_pool = n_body + static_cast<int>(g.abbreviation_tokens.size());

  SentenceDraw s;
  int len = static_cast<int>(rng->uniform_int(g.sentence_len_min, g.sentence_len_max));
  for (int i = 0; i < len - 1; ++i) {
    int pick = static_cast<int>(rng->uniform_int(0, body_pool - 1));
    if (pick < n_body) {
      s.words.push_back(g.vocabulary[pick]);
    } else {
      s.words.push_back(g.abbreviation_tokens[pick - n_body]);
    }
  }
  int fpick = static_cast<int>(rng->uniform_int(0, n_final - 1));
  s.words.push_back(g.vocabulary[n_body + fpick]);

  s.terminal = sample_terminal(g, rng);
  s.comma_after.assign(s.words.size(), false);
  for (size_t i = 0; i + 1 < s.words.size(); ++i) {
    s.comma_after[i] = rng->bernoulli(g.internal_punct_prob);
  }
  return s;
}

std::string render_written_sentence(const SentenceDraw& s) {
  std::string out;
  for (size_t i = 0; i < s.words.size(); ++i) {
    std::string w = s.words[i];
    if (i == 0 && !w.empty()) {
      w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
    }
    out += w;
    if (i + 1 < s.words.size()) {
      if (s.comma_after[i]) out += ",";
      out += " ";
    }
  }
  out += s.terminal;
  return out;
}

json alignment_to_json(const Alignment& al) {
  json entries = json::array();
  for (const auto& e : al.entries) {
    entries.push_back(json::array({e.token_index, e.start_frame, e.end_frame}));
  }
  return json{{"entries", entries},
              {"sentence_boundaries",
               std::vector<int>(al.sentence_boundaries.begin(),
                                al.sentence_boundaries.end())}};
}

Alignment alignment_from_json(const json& j) {
  Alignment al;
  for (const auto& e : j.at("entries")) {
    al.entries.push_back(
        {e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<int>()});
  }
  for (int b : j.at("sentence_boundaries").get<std::vector<int>>()) {
    al.sentence_boundaries.insert(b);
  }
  return al;
}

}  // namespace

void GrammarSpec::validate() const {
  if (vocabulary.size() < 2) {
    throw ValidationError("grammar.vocabulary: need at least 2 words");
  }
  std::set<std::string> seen;
  for (const auto& w : vocabulary) {
    if (w.empty()) throw ValidationError("grammar.vocabulary: empty word");
    if (!seen.insert(normalized_form(w)).second) {
      throw ValidationError("grammar.vocabulary: duplicate normalized word '" +
                            normalized_form(w) + "'");
    }
    for (char c : w) {
      if (kPunctChars.find(c) != std::string::npos) {
        throw ValidationError("grammar.vocabulary: word '" + w +
                              "' contains punctuation");
      }
    }
  }
  if (sentence_len_min < 1 || sentence_len_max < sentence_len_min) {
    throw ValidationError("grammar.sentence_length_range: invalid range");
  }
  if (terminal_punct_weights.empty()) {
    throw ValidationError("grammar.terminal_punct_weights: empty");
  }
  double sum = 0.0;
  for (const auto& [mark, w] : terminal_punct_weights) {
    if (mark != "." && mark != "?" && mark != "!") {
      throw ValidationError("grammar.terminal_punct_weights: bad mark '" +
                            mark + "'");
    }
    if (w < 0.0) {
      throw ValidationError("grammar.terminal_punct_weights: negative weight");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("grammar.terminal_punct_weights: must sum to 1");
  }
  for (const auto& a : abbreviation_tokens) {
    if (a.empty() || a.back() != '.') {
      throw ValidationError(
          "grammar.abbreviation_tokens: entries must end with '.'");
    }
    if (normalized_form(a).empty()) {
      throw ValidationError("grammar.abbreviation_tokens: empty after "
                            "normalization");
    }
    if (!seen.insert(normalized_form(a)).second) {
      throw ValidationError(
          "grammar.abbreviation_tokens: collides with vocabulary word '" +
          normalized_form(a) + "'");
    }
  }
}

int GrammarSpec::n_final_words() const {
  int n = static_cast<int>(vocabulary.size()) / 4;
  return std::max(1, n);
}

void UtteranceSpec::validate() const {
  if (n_sentences < 1) throw ValidationError("utterance.n_sentences: must be >= 1");
  if (hesitation_prob < 0.0 || hesitation_prob > 1.0) {
    throw ValidationError("utterance.hesitation_prob: must be in [0, 1]");
  }
  if (hesitation_ms_min < 0 || hesitation_ms_max < hesitation_ms_min) {
    throw ValidationError("utterance.hesitation_ms_range: invalid range");
  }
  if (inter_sentence_pause_ms_min < 0 ||
      inter_sentence_pause_ms_max < inter_sentence_pause_ms_min) {
    throw ValidationError("utterance.inter_sentence_pause_ms_range: invalid range");
  }
  if (intra_word_gap_ms < 0) {
    throw ValidationError("utterance.intra_word_gap_ms: must be >= 0");
  }
  if (word_duration_ms_min < 1 || word_duration_ms_max < word_duration_ms_min) {
    throw ValidationError("utterance.word_duration_ms_range: invalid range");
  }
  if (noise_std < 0.0) throw ValidationError("utterance.noise_std: must be >= 0");
  if (frame_ms <= 0.0) throw ValidationError("utterance.frame_ms: must be > 0");
  if (feature_dim < 1) throw ValidationError("utterance.feature_dim: must be >= 1");
}

std::vector<std::string> gen_written_corpus(const GrammarSpec& grammar,
                                            int n_paragraphs) {
  grammar.validate();
  if (n_paragraphs < 1) {
    throw ValidationError("gen_written_corpus: n_paragraphs must be >= 1");
  }
  std::vector<std::string> out;
  out.reserve(n_paragraphs);
  for (int p = 0; p < n_paragraphs; ++p) {
    Rng rng(mix_seed(grammar.seed, kWrittenStream + p));
    int n_sent = static_cast<int>(rng.uniform_int(3, 10));
    std::string paragraph;
    for (int s = 0; s < n_sent; ++s) {
      if (s > 0) paragraph += " ";
      paragraph += render_written_sentence(draw_sentence(grammar, &rng));
    }
    out.push_back(std::move(paragraph));
  }
  return out;
}

Vector token_base_pattern(const std::string& token, int dim) {
  Rng rng(splitmix64(fnv1a64(token)));
  Vector v(dim);
  double norm2 = 0.0;
  for (int d = 0; d < dim; ++d) {
    v[d] = rng.gaussian();
    norm2 += v[d] * v[d];
  }
  double norm = std::sqrt(norm2);
  if (norm == 0.0) throw InternalError("token_base_pattern: zero direction");
  for (int d = 0; d < dim; ++d) v[d] /= norm;
  return v;
}

double frame_energy(const double* frame, int dim) {
  double e = 0.0;
  for (int d = 0; d < dim; ++d) e += frame[d] * frame[d];
  return e;
}

FrameSequence render_frames(const std::vector<std::string>& tokens,
                            const PausePlan& plan, const UtteranceSpec& utt,
                            Alignment* alignment) {
  utt.validate();
  if (plan.pause_before_ms.size() != tokens.size() ||
      plan.duration_ms.size() != tokens.size()) {
    throw ValidationError("render_frames: plan/tokens length mismatch");
  }
  auto span_frames = [&](int ms) {
    return static_cast<int>(std::ceil(static_cast<double>(ms) / utt.frame_ms));
  };

  int total = 0;
  for (size_t i = 0; i < tokens.size(); ++i) {
    total += span_frames(plan.pause_before_ms[i]);
    total += span_frames(plan.duration_ms[i]);
  }
  total += span_frames(plan.trailing_pause_ms);

  FrameSequence fs;
  fs.frame_ms = utt.frame_ms;
  fs.frames = Matrix(total, utt.feature_dim);

  Rng noise(mix_seed(utt.seed, kNoiseStream));
  if (alignment) alignment->entries.clear();

  int t = 0;
  auto fill_noise = [&](int n) {
    for (int k = 0; k < n; ++k, ++t) {
      double* row = fs.frames.row(t);
      for (int d = 0; d < utt.feature_dim; ++d) {
        row[d] = utt.noise_std == 0.0 ? 0.0 : noise.gaussian(0.0, utt.noise_std);
      }
    }
  };

  for (size_t i = 0; i < tokens.size(); ++i) {
    fill_noise(span_frames(plan.pause_before_ms[i]));
    Vector base = token_base_pattern(tokens[i], utt.feature_dim);
    int nf = span_frames(plan.duration_ms[i]);
    int start = t;
    for (int k = 0; k < nf; ++k, ++t) {
      double* row = fs.frames.row(t);
      for (int d = 0; d < utt.feature_dim; ++d) {
        row[d] = base[d] +
                 (utt.noise_std == 0.0 ? 0.0 : noise.gaussian(0.0, utt.noise_std));
      }
    }
    if (alignment) {
      alignment->entries.push_back({static_cast<int>(i), start, t});
    }
  }
  fill_noise(span_frames(plan.trailing_pause_ms));
  if (t != total) throw InternalError("render_frames: span accounting mismatch");
  return fs;
}

SpokenUtterance gen_spoken_utterance(const GrammarSpec& grammar,
                                     const UtteranceSpec& utt) {
  grammar.validate();
  utt.validate();

  Rng text_rng(mix_seed(grammar.seed, kSpokenTextStream));
  Rng time_rng(mix_seed(utt.seed, kTimingStream));

  SpokenUtterance su;
  std::vector<int> sentence_of_token;
  std::vector<bool> sentence_start;
  for (int s = 0; s < utt.n_sentences; ++s) {
    SentenceDraw draw = draw_sentence(grammar, &text_rng);
    for (size_t i = 0; i < draw.words.size(); ++i) {
      su.tokens.push_back(normalized_form(draw.words[i]));
      sentence_of_token.push_back(s);
      sentence_start.push_back(i == 0);
    }
    su.eos_after.insert(static_cast<int>(su.tokens.size()) - 1);
  }

  su.plan.pause_before_ms.resize(su.tokens.size());
  su.plan.duration_ms.resize(su.tokens.size());
  for (size_t i = 0; i < su.tokens.size(); ++i) {
    int pause;
    if (i == 0) {
      pause = 0;
    } else if (sentence_start[i]) {
      pause = static_cast<int>(time_rng.uniform_int(
          utt.inter_sentence_pause_ms_min, utt.inter_sentence_pause_ms_max));
    } else if (time_rng.bernoulli(utt.hesitation_prob)) {
      // A hesitation replaces the regular intra-word gap.
      pause = static_cast<int>(
          time_rng.uniform_int(utt.hesitation_ms_min, utt.hesitation_ms_max));
    } else {
      pause = utt.intra_word_gap_ms;
    }
    su.plan.pause_before_ms[i] = pause;
    su.plan.duration_ms[i] = static_cast<int>(time_rng.uniform_int(
        utt.word_duration_ms_min, utt.word_duration_ms_max));
  }
  su.plan.trailing_pause_ms = static_cast<int>(time_rng.uniform_int(
      utt.inter_sentence_pause_ms_min, utt.inter_sentence_pause_ms_max));

  su.frames = render_frames(su.tokens, su.plan, utt, &su.alignment);
  su.alignment.sentence_boundaries = su.eos_after;
  return su;
}

std::vector<SpokenUtterance> gen_spoken_corpus(const GrammarSpec& grammar,
                                               const UtteranceSpec& utt,
                                               int n_utterances) {
  if (n_utterances < 0) {
    throw ValidationError("gen_spoken_corpus: n_utterances must be >= 0");
  }
  std::vector<SpokenUtterance> out;
  out.reserve(n_utterances);
  for (int i = 0; i < n_utterances; ++i) {
    GrammarSpec g = grammar;
    UtteranceSpec u = utt;
    g.seed = mix_seed(grammar.seed, 0x8000000 + i);
    u.seed = mix_seed(utt.seed, 0x9000000 + i);
    out.push_back(gen_spoken_utterance(g, u));
  }
  return out;
}

std::vector<std::string> spoken_vocabulary(const GrammarSpec& grammar) {
  grammar.validate();
  std::set<std::string> forms;
  for (const auto& w : grammar.vocabulary) forms.insert(normalized_form(w));
  for (const auto& a : grammar.abbreviation_tokens) {
    forms.insert(normalized_form(a));
  }
  return std::vector<std::string>(forms.begin(), forms.end());
}

void write_corpus_jsonl(const std::string& path,
                        const std::vector<SpokenUtterance>& corpus) {
  std::ofstream out(path);
  if (!out) throw ValidationError("write_corpus_jsonl: cannot open " + path);
  for (const auto& su : corpus) {
    json j{{"tokens", su.tokens},
           {"eos_positions",
            std::vector<int>(su.eos_after.begin(), su.eos_after.end())},
           {"dim", su.frames.dim()},
           {"frames", su.frames.frames.a},
           {"frame_ms", su.frames.frame_ms},
           {"alignment", alignment_to_json(su.alignment)}};
    out << j.dump() << "\n";
  }
}

std::vector<SpokenUtterance> read_corpus_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("read_corpus_jsonl: cannot open " + path);
  std::vector<SpokenUtterance> corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    SpokenUtterance su;
    su.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (int p : j.at("eos_positions").get<std::vector<int>>()) {
      su.eos_after.insert(p);
    }
    int dim = j.at("dim").get<int>();
    Vector flat = j.at("frames").get<Vector>();
    if (dim <= 0 || flat.size() % dim != 0) {
      throw ValidationError("read_corpus_jsonl: bad frames/dim");
    }
    su.frames.frame_ms = j.at("frame_ms").get<double>();
    su.frames.frames = Matrix(static_cast<int>(flat.size()) / dim, dim);
    su.frames.frames.a = std::move(flat);
    su.alignment = alignment_from_json(j.at("alignment"));
    corpus.push_back(std::move(su));
  }
  return corpus;
}

void write_transcripts_jsonl(const std::string& path,
                             const std::vector<AnnotatedTranscript>& ts) {
  std::ofstream out(path);
  if (!out) throw ValidationError("write_transcripts_jsonl: cannot open " + path);
  for (const auto& t : ts) {
    json j{{"tokens", t.tokens},
           {"eos_after", std::vector<int>(t.eos_after.begin(), t.eos_after.end())}};
    out << j.dump() << "\n";
  }
}

std::vector<AnnotatedTranscript> read_transcripts_jsonl(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("read_transcripts_jsonl: cannot open " + path);
  std::vector<AnnotatedTranscript> ts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    AnnotatedTranscript t;
    t.tokens = j.at("tokens").get<std::vector<std::string>>();
    for (int p : j.at("eos_after").get<std::vector<int>>()) t.eos_after.insert(p);
    ts.push_back(std::move(t));
  }
  return ts;
}

}  // namespace segstream
