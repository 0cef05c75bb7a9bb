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
// Toy streaming transducer. A causal recurrent encoder feeds a first
// decoder directly and, through a right-context cascade, a second
// decoder. Each decoder has a wordpiece joint and a separate
// end-of-sentence joint over one extra class. Training minimizes the
// transducer alignment-marginal loss via an explicit forward/backward
// lattice with hand-written gradients; label-emission gradients can be
// scaled up to reward early emission. EOS fine-tuning updates only the
// EOS joint tensors and leaves the rest of the model bitwise intact.

#ifndef SEGSTREAM_TRANSDUCER_HH_
#define SEGSTREAM_TRANSDUCER_HH_

#include <array>
#include <string>
#include <vector>

#include "segstream/common.hh"
#include "segstream/corpus.hh"

namespace segstream {

struct RnntHyper {
  int hidden_dim = 32;      // causal and cascaded encoder width
  int pred_dim = 16;        // prediction-network width
  int right_context = 9;    // cascade lookahead frames
  double learning_rate = 0.15;
  int epochs = 20;
  int batch_size = 4;
  double grad_clip_norm = 5.0;
  double fastemit_lambda = 0.0;
  uint64_t seed = 1;

  void validate() const;
};

struct RnntParams {
  std::vector<std::string> vocab;  // wordpiece id order
  int input_dim = 16;
  int hidden_dim = 32;
  int pred_dim = 16;
  int right_context = 9;

  Matrix enc_in, enc_rec;   // [D x H], [H x H]
  Vector enc_b;             // [H]
  Matrix casc_w;            // [(R+1)H x H]
  Vector casc_b;            // [H]
  Matrix pred_emb;          // [(V+1) x P]; row V is the empty-slot vector
  Matrix pred_w;            // [2P x P]
  Vector pred_b;            // [P]
  Matrix wp1_w, eos1_w;     // [(H+P) x (V+1)], [(H+P) x (V+2)]
  Vector wp1_b, eos1_b;
  Matrix wp2_w, eos2_w;
  Vector wp2_b, eos2_b;

  int vocab_size() const { return static_cast<int>(vocab.size()); }
  int blank_id() const { return vocab_size(); }
  int eos_id() const { return vocab_size() + 1; }
  int token_id(const std::string& tok) const;  // -1 if unknown
};

// Which joint produces the output distribution.
enum class JointHead { kWp1, kEos1, kWp2, kEos2 };

bool is_eos_head(JointHead head);
bool is_second_decoder(JointHead head);

// Named views over all tensors; gradient bundles mirror the order.
std::vector<TensorView> tensor_views(RnntParams* p);
std::vector<std::string> eos_tensor_names();

RnntParams init_rnnt(const std::vector<std::string>& vocab, int input_dim,
                     const RnntHyper& hyper);

// Causal encoder over frames with optional carried state; strictly
// causal, returns outputs and the final state (equal to the last row).
struct EncoderResult {
  Matrix outputs;      // [T x H]
  Vector final_state;  // [H]
};
EncoderResult encode_causal(const RnntParams& p, const Matrix& frames,
                            const Vector* initial_state);

// Cascaded encoder: output t is a pointwise transform of causal
// outputs t..t+R, right-padded by repeating the final available frame.
Matrix encode_cascaded(const RnntParams& p, const Matrix& causal);

// Prediction-network output for the last two emitted tokens; -1 marks
// an empty slot. Stateless: depends only on these two ids.
Vector prednet(const RnntParams& p, int prev2, int prev1);

// Joint logits for one (encoder frame, prediction vector) pair.
// Wordpiece heads emit V+1 logits (blank last); EOS heads emit V+2
// (blank then the EOS class).
Vector joint_logits(const RnntParams& p, const double* h, const Vector& g,
                    JointHead head);

// Forward/backward quantities of one loss evaluation. Node (t, u) means
// t frames consumed and u labels emitted; blank moves to (t+1, u) and
// costs blank_lp(t, u), the label y[u] moves to (t, u+1) and costs
// label_lp(t, u). Emissions at t == T reuse the final frame.
struct RnntLattice {
  double loss = 0.0;       // -log P(labels | frames)
  bool impossible = false; // no frames but labels remain
  Matrix alpha, beta;      // [(T+1) x (U+1)] log-space
  Matrix blank_lp, label_lp;
  // d loss / d emission-log-prob per node, before and after the
  // early-emission scaling of the label part.
  Matrix blank_grad, label_grad;
};

// Gradients for every tensor, in tensor_views order.
struct RnntGrads {
  RnntParams shaped;  // same shapes, holds gradient values
  std::vector<TensorView> views() { return tensor_views(&shaped); }
};

// Loss (and optionally full parameter gradients) of one utterance
// through one head. Labels are class ids; EOS heads accept eos_id().
// fastemit_lambda scales each node's label-emission gradient by
// (1 + lambda) before backpropagation; blank parts are untouched.
RnntLattice rnnt_loss(const RnntParams& p, const Matrix& frames,
                      const std::vector<int>& labels, JointHead head,
                      double fastemit_lambda = 0.0,
                      RnntGrads* grads = nullptr);

// Scales the label-emission gradient components in place.
void apply_fastemit(RnntLattice* lattice, double lambda);

// Exhaustive loss over all C(T+U, U) monotone alignments, computed
// from the same per-node emission tables. Refuses instances with
// T * U > 20. Oracle for the dynamic program.
double rnnt_loss_bruteforce(const Matrix& blank_lp, const Matrix& label_lp);

// The per-node emission tables for a given head; exposed so oracles
// can be driven by the same inputs as the lattice.
void rnnt_emission_tables(const RnntParams& p, const Matrix& frames,
                          const std::vector<int>& labels, JointHead head,
                          Matrix* blank_lp, Matrix* label_lp);

// Trains encoders, prediction network, and both wordpiece joints on
// token transcripts (both decoder paths contribute to the loss).
RnntParams train_base(const std::vector<SpokenUtterance>& corpus,
                      const std::vector<std::string>& vocab,
                      const RnntHyper& hyper,
                      std::vector<TrainLogRow>* log = nullptr);

// Fine-tunes only the EOS joints on transcripts with sentence-end
// markers injected (label sequences over wordpieces plus eos_id()).
// All other tensors stay bitwise identical to `base`.
RnntParams finetune_eos(const RnntParams& base,
                        const std::vector<SpokenUtterance>& corpus,
                        const std::vector<std::vector<uint8_t>>& eos_labels,
                        const RnntHyper& hyper,
                        std::vector<TrainLogRow>* log = nullptr);

// Checkpoint serialization (JSON with shape metadata and row-major data).
void save_rnnt(const std::string& path, const RnntParams& p);
RnntParams load_rnnt(const std::string& path);

}  // namespace segstream

#endif  // SEGSTREAM_TRANSDUCER_HH_
