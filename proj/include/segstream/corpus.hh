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
// Reproducible synthetic corpora. A shared grammar produces written
// paragraphs (casing, commas, terminal marks, abbreviations) and spoken
// utterances (punctuation-free tokens, pause plans, pseudo-acoustic
// frames with per-token patterns, exact alignments). Sentence-final
// words are drawn from a reserved tail of the vocabulary so that
// sentence boundaries are learnable from the token stream alone.

#ifndef SEGSTREAM_CORPUS_HH_
#define SEGSTREAM_CORPUS_HH_

#include <map>
#include <set>
#include <string>
#include <vector>

#include "segstream/annotate.hh"
#include "segstream/common.hh"

namespace segstream {

struct GrammarSpec {
  std::vector<std::string> vocabulary;
  int sentence_len_min = 3;
  int sentence_len_max = 7;
  // Probabilities for the sentence-terminal mark; keys drawn from {. ? !}.
  std::map<std::string, double> terminal_punct_weights = {
      {".", 0.6}, {"?", 0.25}, {"!", 0.15}};
  double internal_punct_prob = 0.15;
  // Entries keep their embedded period, e.g. "inc.".
  std::vector<std::string> abbreviation_tokens;
  uint64_t seed = 1;

  void validate() const;
  // Number of vocabulary words reserved for the sentence-final slot
  // (the tail quarter of the list, at least one word).
  int n_final_words() const;
};

struct UtteranceSpec {
  int n_sentences = 2;
  double hesitation_prob = 0.25;
  int hesitation_ms_min = 500;
  int hesitation_ms_max = 800;
  int inter_sentence_pause_ms_min = 700;
  int inter_sentence_pause_ms_max = 1100;
  int intra_word_gap_ms = 40;
  int word_duration_ms_min = 120;
  int word_duration_ms_max = 240;
  double noise_std = 0.03;
  double frame_ms = 10.0;
  int feature_dim = 16;
  uint64_t seed = 1;

  void validate() const;
};

struct FrameSequence {
  Matrix frames;  // [T x dim]
  double frame_ms = 10.0;

  int n_frames() const { return frames.rows; }
  int dim() const { return frames.cols; }
};

// Frame span of one token; end_frame is exclusive.
struct AlignmentEntry {
  int token_index = 0;
  int start_frame = 0;
  int end_frame = 0;
};

struct Alignment {
  std::vector<AlignmentEntry> entries;
  std::set<int> sentence_boundaries;  // token indices that end a sentence
};

// Per-token timing of one utterance, all in milliseconds.
struct PausePlan {
  std::vector<int> pause_before_ms;  // silence before each token
  std::vector<int> duration_ms;      // rendered length of each token
  int trailing_pause_ms = 0;
};

struct SpokenUtterance {
  std::vector<std::string> tokens;
  std::set<int> eos_after;  // ground-truth sentence ends
  FrameSequence frames;
  Alignment alignment;
  PausePlan plan;
};

// Paragraphs of written text: capitalized sentence starts, optional
// commas, terminal marks attached to the final word, abbreviations
// mid-sentence. Deterministic in spec.seed.
std::vector<std::string> gen_written_corpus(const GrammarSpec& grammar,
                                            int n_paragraphs);

// One spoken utterance: normalized tokens, ground-truth sentence ends,
// pause plan (hesitations replace the intra-word gap), rendered frames,
// and the exact alignment. Deterministic in grammar.seed and utt.seed.
SpokenUtterance gen_spoken_utterance(const GrammarSpec& grammar,
                                     const UtteranceSpec& utt);

// Renders tokens and pauses to frames. Every span occupies
// ceil(ms / frame_ms) frames; token frames are the token's unit-energy
// base pattern plus N(0, noise_std) per dimension, pause frames are
// noise only. Also returns the alignment entries via `alignment`.
FrameSequence render_frames(const std::vector<std::string>& tokens,
                            const PausePlan& plan, const UtteranceSpec& utt,
                            Alignment* alignment);

// A corpus of independently seeded utterances (seed mixed with index).
std::vector<SpokenUtterance> gen_spoken_corpus(const GrammarSpec& grammar,
                                               const UtteranceSpec& utt,
                                               int n_utterances);

// Sorted unique normalized word forms of the grammar (body words,
// final words, and abbreviations with punctuation stripped).
std::vector<std::string> spoken_vocabulary(const GrammarSpec& grammar);

// The deterministic unit-energy base pattern of a token.
Vector token_base_pattern(const std::string& token, int dim);

// Sum of squared values of one frame.
double frame_energy(const double* frame, int dim);

// JSONL serialization: one utterance per line with fields
// {tokens, eos_positions, dim, frames, frame_ms, alignment}.
void write_corpus_jsonl(const std::string& path,
                        const std::vector<SpokenUtterance>& corpus);
std::vector<SpokenUtterance> read_corpus_jsonl(const std::string& path);

// Annotated transcripts as JSONL {tokens, eos_after}.
void write_transcripts_jsonl(const std::string& path,
                             const std::vector<AnnotatedTranscript>& ts);
std::vector<AnnotatedTranscript> read_transcripts_jsonl(
    const std::string& path);

}  // namespace segstream

#endif  // SEGSTREAM_CORPUS_HH_
