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
// Sentence-boundary teachers. The semantic teacher is a bidirectional
// recurrent tagger with an autoregressive two-class label decoder
// (epsilon or <EOS> after each token), trained on written-domain
// windows with teacher forcing and hand-written BPTT. The pause
// teacher is a rule: mark <EOS> wherever the aligned silence gap
// reaches a threshold.

#ifndef SEGSTREAM_TEACHER_HH_
#define SEGSTREAM_TEACHER_HH_

#include <string>
#include <vector>

#include "segstream/annotate.hh"
#include "segstream/common.hh"
#include "segstream/corpus.hh"

namespace segstream {

struct TeacherHyper {
  int embed_dim = 16;   // E
  int hidden_dim = 32;  // H, per direction
  int dec_dim = 16;     // H_d
  double learning_rate = 0.5;
  int epochs = 30;
  int batch_size = 8;
  double grad_clip_norm = 5.0;
  // Chunking geometry carried into the trained params for prediction
  // on inputs longer than one window.
  int window = 40;
  int overlap = 10;
  uint64_t seed = 1;

  void validate() const;
};

struct TeacherParams {
  std::vector<std::string> vocab;  // row 0 is the unknown-token slot
  int embed_dim = 16;
  int hidden_dim = 32;
  int dec_dim = 16;
  int window = 40;
  int overlap = 10;
  double final_train_loss = 0.0;

  Matrix embedding;         // [V x E]
  Matrix fwd_in, fwd_rec;   // [E x H], [H x H]
  Vector fwd_b;             // [H]
  Matrix bwd_in, bwd_rec;   // [E x H], [H x H]
  Vector bwd_b;             // [H]
  Matrix lab_emb;           // [2 x H_d]; rows: epsilon, <EOS>
  Matrix dec_in, dec_rec;   // [H_d x H_d], [H_d x H_d]
  Vector dec_b;             // [H_d]
  Matrix out_w;             // [(2H + H_d) x 2]; columns: epsilon, <EOS>
  Vector out_b;             // [2]

  int vocab_size() const { return static_cast<int>(vocab.size()); }
  int token_id(const std::string& tok) const;  // 0 (unknown) if absent
};

std::vector<TensorView> teacher_tensor_views(TeacherParams* p);

// Fresh random params over a vocabulary whose row 0 must be the
// unknown-token slot.
TeacherParams init_teacher(const std::vector<std::string>& vocab,
                           const TeacherHyper& hyper);

// Per-token p(y_t = <EOS>) for one window. The decoder consumes
// `forced_history` when given, otherwise its own greedy bias-0
// decisions. Empty input yields empty output.
std::vector<double> teacher_forward(const TeacherParams& p,
                                    const std::vector<std::string>& tokens,
                                    const std::vector<uint8_t>* forced_history);

// Greedy labels with `bias` added to the <EOS> logit at each step
// before the comparison; ties go to epsilon. Inputs longer than the
// trained window are chunked and merged.
std::vector<uint8_t> teacher_predict(const TeacherParams& p,
                                     const std::vector<std::string>& tokens,
                                     double bias);

// Trains on labeled windows with teacher forcing; vocabulary is the
// sorted set of window tokens behind the unknown slot. Loss is mean
// per-token cross-entropy per batch.
TeacherParams teacher_train(const std::vector<Window>& corpus,
                            const TeacherHyper& hyper,
                            std::vector<TrainLogRow>* log = nullptr);

struct TeacherEval {
  double label_accuracy = 0.0;
  double full_sequence_accuracy = 0.0;
  double f1 = 0.0;
};

// Greedy bias-0 predictions against window labels. F1 pools <EOS>
// decisions across windows; no predictions and no references is a
// perfect 1, no predictions against any references is 0.
TeacherEval teacher_eval(const TeacherParams& p,
                         const std::vector<Window>& data);

// Acoustic rule teacher: label[i] = 1 iff the silence after token i
// lasts at least silence_threshold_ms and is nonzero. The gap after
// the last token is the trailing span up to the end of `frames`.
std::vector<uint8_t> pause_teacher_annotate(
    const std::vector<std::string>& tokens, const Alignment& alignment,
    const FrameSequence& frames, double silence_threshold_ms);

void save_teacher(const std::string& path, const TeacherParams& p);
TeacherParams load_teacher(const std::string& path);

}  // namespace segstream

#endif  // SEGSTREAM_TEACHER_HH_
