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

#include "segstream/transducer.hh"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

#include "json.hpp"

namespace segstream {

namespace {

using nlohmann::json;

struct HeadRefs {
  const Matrix* w;
  const Vector* b;
};

HeadRefs head_refs(const RnntParams& p, JointHead head) {
  switch (head) {
    case JointHead::kWp1: return {&p.wp1_w, &p.wp1_b};
    case JointHead::kEos1: return {&p.eos1_w, &p.eos1_b};
    case JointHead::kWp2: return {&p.wp2_w, &p.wp2_b};
    case JointHead::kEos2: return {&p.eos2_w, &p.eos2_b};
  }
  throw InternalError("head_refs: bad head");
}

struct HeadGradRefs {
  Matrix* w;
  Vector* b;
};

HeadGradRefs head_grad_refs(RnntParams* g, JointHead head) {
  switch (head) {
    case JointHead::kWp1: return {&g->wp1_w, &g->wp1_b};
    case JointHead::kEos1: return {&g->eos1_w, &g->eos1_b};
    case JointHead::kWp2: return {&g->wp2_w, &g->wp2_b};
    case JointHead::kEos2: return {&g->eos2_w, &g->eos2_b};
  }
  throw InternalError("head_grad_refs: bad head");
}

// Everything the lattice and its backward pass need from the network.
struct ForwardTape {
  Matrix causal;                        // [T x H]
  Matrix enc_out;                       // causal or cascaded
  std::vector<std::array<int, 2>> ctx;  // per u: (prev2, prev1), -1 empty
  std::vector<Vector> g;                // [U+1][P]
  std::vector<Vector> jh;               // [T][C] encoder joint part + bias
  std::vector<Vector> jg;               // [U+1][C] prediction joint part
  int n_classes = 0;
};

void build_contexts(const RnntParams& p, const std::vector<int>& labels,
                    std::vector<std::array<int, 2>>* ctx) {
  const int U = static_cast<int>(labels.size());
  ctx->resize(U + 1);
  std::array<int, 2> cur = {-1, -1};
  (*ctx)[0] = cur;
  for (int u = 0; u < U; ++u) {
    // Only wordpieces enter the prediction context; the EOS class has
    // no embedding row and is skipped.
    if (labels[u] >= 0 && labels[u] < p.vocab_size()) {
      cur = {cur[1], labels[u]};
    }
    (*ctx)[u + 1] = cur;
  }
}

ForwardTape run_forward(const RnntParams& p, const Matrix& frames,
                        const std::vector<int>& labels, JointHead head) {
  ForwardTape tape;
  EncoderResult enc = encode_causal(p, frames, nullptr);
  tape.causal = std::move(enc.outputs);
  tape.enc_out =
      is_second_decoder(head) ? encode_cascaded(p, tape.causal) : tape.causal;

  build_contexts(p, labels, &tape.ctx);
  const int U = static_cast<int>(labels.size());
  tape.g.resize(U + 1);
  for (int u = 0; u <= U; ++u) {
    tape.g[u] = prednet(p, tape.ctx[u][0], tape.ctx[u][1]);
  }

  HeadRefs hr = head_refs(p, head);
  const int C = static_cast<int>(hr.b->size());
  tape.n_classes = C;
  const int H = p.hidden_dim;
  const int T = tape.enc_out.rows;

  tape.jh.resize(T);
  for (int t = 0; t < T; ++t) {
    Vector v(*hr.b);
    const double* h = tape.enc_out.row(t);
    for (int i = 0; i < H; ++i) {
      double hi = h[i];
      const double* row = hr.w->row(i);
      for (int k = 0; k < C; ++k) v[k] += row[k] * hi;
    }
    tape.jh[t] = std::move(v);
  }
  tape.jg.resize(U + 1);
  for (int u = 0; u <= U; ++u) {
    Vector v(C, 0.0);
    for (int j = 0; j < p.pred_dim; ++j) {
      double gj = tape.g[u][j];
      const double* row = hr.w->row(H + j);
      for (int k = 0; k < C; ++k) v[k] += row[k] * gj;
    }
    tape.jg[u] = std::move(v);
  }
  return tape;
}

// Fills blank/label log-prob tables and the per-node normalizers.
void emissions_from_tape(const ForwardTape& tape,
                         const std::vector<int>& labels, int blank_id,
                         Matrix* blank_lp, Matrix* label_lp, Matrix* norm) {
  const int T = static_cast<int>(tape.jh.size());
  const int U = static_cast<int>(labels.size());
  const int C = tape.n_classes;
  *blank_lp = Matrix(T + 1, U + 1);
  *label_lp = Matrix(T + 1, U + 1);
  *norm = Matrix(T + 1, U + 1);
  Vector logits(C);
  for (int t = 0; t <= T; ++t) {
    const Vector& jh = tape.jh[std::min(t, T - 1)];
    for (int u = 0; u <= U; ++u) {
      const Vector& jg = tape.jg[u];
      for (int k = 0; k < C; ++k) logits[k] = jh[k] + jg[k];
      double z = logsumexp(logits.data(), C);
      norm->at(t, u) = z;
      blank_lp->at(t, u) = logits[blank_id] - z;
      label_lp->at(t, u) = u < U ? logits[labels[u]] - z : kNegInf;
    }
  }
}

void lattice_forward_backward(const std::vector<int>& labels,
                              RnntLattice* lat) {
  const int T = lat->blank_lp.rows - 1;
  const int U = static_cast<int>(labels.size());
  lat->alpha = Matrix(T + 1, U + 1);
  lat->beta = Matrix(T + 1, U + 1);
  Matrix& a = lat->alpha;
  Matrix& b = lat->beta;
  std::fill(a.a.begin(), a.a.end(), kNegInf);
  std::fill(b.a.begin(), b.a.end(), kNegInf);

  a.at(0, 0) = 0.0;
  for (int t = 0; t <= T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      double v = kNegInf;
      if (t > 0) v = logsumexp(v, a.at(t - 1, u) + lat->blank_lp.at(t - 1, u));
      if (u > 0) v = logsumexp(v, a.at(t, u - 1) + lat->label_lp.at(t, u - 1));
      a.at(t, u) = v;
    }
  }
  b.at(T, U) = 0.0;
  for (int t = T; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      if (t == T && u == U) continue;
      double v = kNegInf;
      if (t < T) v = logsumexp(v, lat->blank_lp.at(t, u) + b.at(t + 1, u));
      if (u < U) v = logsumexp(v, lat->label_lp.at(t, u) + b.at(t, u + 1));
      b.at(t, u) = v;
    }
  }
  lat->loss = -a.at(T, U);
}

void node_gradients(const std::vector<int>& labels, RnntLattice* lat) {
  const int T = lat->blank_lp.rows - 1;
  const int U = static_cast<int>(labels.size());
  const double log_p = -lat->loss;
  lat->blank_grad = Matrix(T + 1, U + 1);
  lat->label_grad = Matrix(T + 1, U + 1);
  for (int t = 0; t <= T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t < T) {
        double lg = lat->alpha.at(t, u) + lat->blank_lp.at(t, u) +
                    lat->beta.at(t + 1, u) - log_p;
        lat->blank_grad.at(t, u) = -std::exp(lg);
      }
      if (u < U) {
        double lg = lat->alpha.at(t, u) + lat->label_lp.at(t, u) +
                    lat->beta.at(t, u + 1) - log_p;
        lat->label_grad.at(t, u) = -std::exp(lg);
      }
    }
  }
}

// Backpropagates node gradients into parameter tensors. When
// joints_only is set, only the active head's joint receives gradient
// (enough for EOS fine-tuning, which freezes everything else).
void backward_to_params(const RnntParams& p, const Matrix& frames,
                        const std::vector<int>& labels, JointHead head,
                        const ForwardTape& tape, const RnntLattice& lat,
                        const Matrix& norm, RnntGrads* grads,
                        bool joints_only) {
  const int T = tape.enc_out.rows;
  const int U = static_cast<int>(labels.size());
  const int C = tape.n_classes;
  const int H = p.hidden_dim;
  const int P = p.pred_dim;
  HeadRefs hr = head_refs(p, head);
  HeadGradRefs hg = head_grad_refs(&grads->shaped, head);

  // Per-frame and per-context sums of d loss / d logits.
  std::vector<Vector> s(T, Vector(C, 0.0));
  std::vector<Vector> r(U + 1, Vector(C, 0.0));
  Vector dz(C);
  for (int t = 0; t <= T; ++t) {
    int te = std::min(t, T - 1);
    const Vector& jh = tape.jh[te];
    for (int u = 0; u <= U; ++u) {
      double bg = t < T ? lat.blank_grad.at(t, u) : 0.0;
      double lg = u < U ? lat.label_grad.at(t, u) : 0.0;
      if (bg == 0.0 && lg == 0.0) continue;
      const Vector& jg = tape.jg[u];
      double z = norm.at(t, u);
      double gsum = bg + lg;
      for (int k = 0; k < C; ++k) dz[k] = -std::exp(jh[k] + jg[k] - z) * gsum;
      dz[p.blank_id()] += bg;
      if (u < U) dz[labels[u]] += lg;
      Vector& st = s[te];
      Vector& ru = r[u];
      for (int k = 0; k < C; ++k) {
        st[k] += dz[k];
        ru[k] += dz[k];
      }
    }
  }

  // Joint weight rows 0..H-1 couple the encoder, rows H..H+P-1 the
  // prediction network; the bias collects every node.
  for (int t = 0; t < T; ++t) {
    const double* h = tape.enc_out.row(t);
    const Vector& st = s[t];
    for (int i = 0; i < H; ++i) {
      double hi = h[i];
      if (hi == 0.0) continue;
      double* row = hg.w->row(i);
      for (int k = 0; k < C; ++k) row[k] += hi * st[k];
    }
    for (int k = 0; k < C; ++k) (*hg.b)[k] += st[k];
  }
  for (int u = 0; u <= U; ++u) {
    const Vector& gu = tape.g[u];
    const Vector& ru = r[u];
    for (int j = 0; j < P; ++j) {
      double gj = gu[j];
      if (gj == 0.0) continue;
      double* row = hg.w->row(H + j);
      for (int k = 0; k < C; ++k) row[k] += gj * ru[k];
    }
  }
  if (joints_only) return;

  // d loss / d encoder outputs and d prediction vectors.
  Matrix denc(T, H);
  for (int t = 0; t < T; ++t) {
    const Vector& st = s[t];
    double* out = denc.row(t);
    for (int i = 0; i < H; ++i) {
      const double* row = hr.w->row(i);
      double acc = 0.0;
      for (int k = 0; k < C; ++k) acc += row[k] * st[k];
      out[i] = acc;
    }
  }
  std::vector<Vector> dg(U + 1, Vector(P, 0.0));
  for (int u = 0; u <= U; ++u) {
    const Vector& ru = r[u];
    for (int j = 0; j < P; ++j) {
      const double* row = hr.w->row(H + j);
      double acc = 0.0;
      for (int k = 0; k < C; ++k) acc += row[k] * ru[k];
      dg[u][j] = acc;
    }
  }

  // Prediction network: g = tanh(pred_w^T [e_a; e_b] + pred_b).
  for (int u = 0; u <= U; ++u) {
    int a_row = tape.ctx[u][0] < 0 ? p.vocab_size() : tape.ctx[u][0];
    int b_row = tape.ctx[u][1] < 0 ? p.vocab_size() : tape.ctx[u][1];
    Vector dpre(P);
    for (int j = 0; j < P; ++j) {
      double gj = tape.g[u][j];
      dpre[j] = (1.0 - gj * gj) * dg[u][j];
    }
    const double* ea = p.pred_emb.row(a_row);
    const double* eb = p.pred_emb.row(b_row);
    for (int i = 0; i < P; ++i) {
      double* row_a = grads->shaped.pred_w.row(i);
      double* row_b = grads->shaped.pred_w.row(P + i);
      for (int j = 0; j < P; ++j) {
        row_a[j] += ea[i] * dpre[j];
        row_b[j] += eb[i] * dpre[j];
      }
    }
    for (int j = 0; j < P; ++j) grads->shaped.pred_b[j] += dpre[j];
    double* dea = grads->shaped.pred_emb.row(a_row);
    double* deb = grads->shaped.pred_emb.row(b_row);
    for (int i = 0; i < P; ++i) {
      const double* row_a = p.pred_w.row(i);
      const double* row_b = p.pred_w.row(P + i);
      double acc_a = 0.0, acc_b = 0.0;
      for (int j = 0; j < P; ++j) {
        acc_a += row_a[j] * dpre[j];
        acc_b += row_b[j] * dpre[j];
      }
      dea[i] += acc_a;
      deb[i] += acc_b;
    }
  }

  // Cascade, if this head sits on the second decoder: scatter window
  // gradients back onto the causal outputs.
  Matrix dcausal(T, H);
  if (is_second_decoder(head)) {
    const int R = p.right_context;
    Vector dpre(H);
    for (int t = 0; t < T; ++t) {
      const double* c = tape.enc_out.row(t);
      const double* dc = denc.row(t);
      for (int j = 0; j < H; ++j) dpre[j] = (1.0 - c[j] * c[j]) * dc[j];
      for (int j = 0; j < H; ++j) grads->shaped.casc_b[j] += dpre[j];
      for (int rr = 0; rr <= R; ++rr) {
        int src = std::min(t + rr, T - 1);
        const double* hsrc = tape.causal.row(src);
        double* dh = dcausal.row(src);
        for (int i = 0; i < H; ++i) {
          double* wrow = grads->shaped.casc_w.row(rr * H + i);
          const double* prow = p.casc_w.row(rr * H + i);
          double hi = hsrc[i];
          double acc = 0.0;
          for (int j = 0; j < H; ++j) {
            wrow[j] += hi * dpre[j];
            acc += prow[j] * dpre[j];
          }
          dh[i] += acc;
        }
      }
    }
  } else {
    dcausal = denc;
  }

  // Causal encoder BPTT: h_t = tanh(enc_in^T x_t + enc_rec^T h_{t-1} + b).
  const int D = p.input_dim;
  Vector carry(H, 0.0);
  Vector da(H);
  for (int t = T - 1; t >= 0; --t) {
    const double* h = tape.causal.row(t);
    const double* dh = dcausal.row(t);
    for (int j = 0; j < H; ++j) {
      da[j] = (1.0 - h[j] * h[j]) * (dh[j] + carry[j]);
    }
    const double* x = frames.row(t);
    for (int i = 0; i < D; ++i) {
      double xi = x[i];
      if (xi == 0.0) continue;
      double* row = grads->shaped.enc_in.row(i);
      for (int j = 0; j < H; ++j) row[j] += xi * da[j];
    }
    if (t > 0) {
      const double* hp = tape.causal.row(t - 1);
      for (int i = 0; i < H; ++i) {
        double hi = hp[i];
        double* row = grads->shaped.enc_rec.row(i);
        for (int j = 0; j < H; ++j) row[j] += hi * da[j];
      }
    }
    for (int j = 0; j < H; ++j) grads->shaped.enc_b[j] += da[j];
    std::fill(carry.begin(), carry.end(), 0.0);
    for (int i = 0; i < H; ++i) {
      const double* row = p.enc_rec.row(i);
      double acc = 0.0;
      for (int j = 0; j < H; ++j) acc += row[j] * da[j];
      carry[i] = acc;
    }
  }
}

RnntParams zero_like(const RnntParams& p) {
  RnntParams z = p;
  auto views = tensor_views(&z);
  for (auto& v : views) std::fill(v.data, v.data + v.size, 0.0);
  return z;
}

std::vector<int> label_ids(const RnntParams& p,
                           const std::vector<std::string>& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) {
    int id = p.token_id(tok);
    if (id < 0) {
      throw ValidationError("transducer: token '" + tok + "' not in vocabulary");
    }
    ids.push_back(id);
  }
  return ids;
}

json tensor_to_json(const TensorView& v, const std::vector<int>& shape) {
  return json{{"shape", shape},
              {"data", std::vector<double>(v.data, v.data + v.size)}};
}

}  // namespace

void RnntHyper::validate() const {
  if (hidden_dim < 1) throw ValidationError("transducer.hidden_dim: must be >= 1");
  if (pred_dim < 1) throw ValidationError("transducer.pred_dim: must be >= 1");
  if (right_context < 0) {
    throw ValidationError("transducer.right_context: must be >= 0");
  }
  if (learning_rate <= 0.0) {
    throw ValidationError("transducer.learning_rate: must be > 0");
  }
  if (epochs < 0) throw ValidationError("transducer.epochs: must be >= 0");
  if (batch_size < 1) throw ValidationError("transducer.batch_size: must be >= 1");
  if (grad_clip_norm <= 0.0) {
    throw ValidationError("transducer.grad_clip_norm: must be > 0");
  }
  if (fastemit_lambda < 0.0) {
    throw ValidationError("transducer.fastemit_lambda: must be >= 0");
  }
}

int RnntParams::token_id(const std::string& tok) const {
  auto it = std::lower_bound(vocab.begin(), vocab.end(), tok);
  if (it != vocab.end() && *it == tok) {
    return static_cast<int>(it - vocab.begin());
  }
  return -1;
}

bool is_eos_head(JointHead head) {
  return head == JointHead::kEos1 || head == JointHead::kEos2;
}

bool is_second_decoder(JointHead head) {
  return head == JointHead::kWp2 || head == JointHead::kEos2;
}

std::vector<TensorView> tensor_views(RnntParams* p) {
  auto mv = [](const char* name, Matrix& m) {
    return TensorView{name, m.a.data(), m.a.size()};
  };
  auto vv = [](const char* name, Vector& v) {
    return TensorView{name, v.data(), v.size()};
  };
  return {
      mv("enc_in", p->enc_in),   mv("enc_rec", p->enc_rec),
      vv("enc_b", p->enc_b),     mv("casc_w", p->casc_w),
      vv("casc_b", p->casc_b),   mv("pred_emb", p->pred_emb),
      mv("pred_w", p->pred_w),   vv("pred_b", p->pred_b),
      mv("wp1_w", p->wp1_w),     vv("wp1_b", p->wp1_b),
      mv("eos1_w", p->eos1_w),   vv("eos1_b", p->eos1_b),
      mv("wp2_w", p->wp2_w),     vv("wp2_b", p->wp2_b),
      mv("eos2_w", p->eos2_w),   vv("eos2_b", p->eos2_b),
  };
}

std::vector<std::string> eos_tensor_names() {
  return {"eos1_w", "eos1_b", "eos2_w", "eos2_b"};
}

RnntParams init_rnnt(const std::vector<std::string>& vocab, int input_dim,
                     const RnntHyper& hyper) {
  hyper.validate();
  if (vocab.empty()) throw ValidationError("init_rnnt: empty vocabulary");
  if (!std::is_sorted(vocab.begin(), vocab.end())) {
    throw ValidationError("init_rnnt: vocabulary must be sorted");
  }
  RnntParams p;
  p.vocab = vocab;
  p.input_dim = input_dim;
  p.hidden_dim = hyper.hidden_dim;
  p.pred_dim = hyper.pred_dim;
  p.right_context = hyper.right_context;

  const int V = p.vocab_size();
  const int H = p.hidden_dim;
  const int P = p.pred_dim;
  const int R = p.right_context;
  p.enc_in = Matrix(input_dim, H);
  p.enc_rec = Matrix(H, H);
  p.enc_b.assign(H, 0.0);
  p.casc_w = Matrix((R + 1) * H, H);
  p.casc_b.assign(H, 0.0);
  p.pred_emb = Matrix(V + 1, P);
  p.pred_w = Matrix(2 * P, P);
  p.pred_b.assign(P, 0.0);
  p.wp1_w = Matrix(H + P, V + 1);
  p.wp1_b.assign(V + 1, 0.0);
  p.eos1_w = Matrix(H + P, V + 2);
  p.eos1_b.assign(V + 2, 0.0);
  p.wp2_w = Matrix(H + P, V + 1);
  p.wp2_b.assign(V + 1, 0.0);
  p.eos2_w = Matrix(H + P, V + 2);
  p.eos2_b.assign(V + 2, 0.0);

  Rng rng(mix_seed(hyper.seed, 0x726e6e74ULL));
  auto fill = [&](Matrix& m) {
    double scale = 1.0 / std::sqrt(static_cast<double>(m.rows));
    for (double& x : m.a) x = rng.gaussian(0.0, scale);
  };
  fill(p.enc_in);
  fill(p.enc_rec);
  fill(p.casc_w);
  for (double& x : p.pred_emb.a) x = rng.gaussian(0.0, 0.5);
  fill(p.pred_w);
  fill(p.wp1_w);
  fill(p.eos1_w);
  fill(p.wp2_w);
  fill(p.eos2_w);
  return p;
}

EncoderResult encode_causal(const RnntParams& p, const Matrix& frames,
                            const Vector* initial_state) {
  const int T = frames.rows;
  const int H = p.hidden_dim;
  const int D = p.input_dim;
  if (frames.cols != D) {
    throw ValidationError("encode_causal: frame dim mismatch");
  }
  if (initial_state && static_cast<int>(initial_state->size()) != H) {
    throw ValidationError("encode_causal: initial state dim mismatch");
  }
  EncoderResult res;
  res.outputs = Matrix(T, H);
  Vector state = initial_state ? *initial_state : Vector(H, 0.0);
  Vector pre(H);
  for (int t = 0; t < T; ++t) {
    pre = p.enc_b;
    const double* x = frames.row(t);
    for (int i = 0; i < D; ++i) {
      double xi = x[i];
      if (xi == 0.0) continue;
      const double* row = p.enc_in.row(i);
      for (int j = 0; j < H; ++j) pre[j] += row[j] * xi;
    }
    for (int i = 0; i < H; ++i) {
      double si = state[i];
      if (si == 0.0) continue;
      const double* row = p.enc_rec.row(i);
      for (int j = 0; j < H; ++j) pre[j] += row[j] * si;
    }
    double* out = res.outputs.row(t);
    for (int j = 0; j < H; ++j) out[j] = std::tanh(pre[j]);
    state.assign(out, out + H);
  }
  res.final_state = state;
  return res;
}

Matrix encode_cascaded(const RnntParams& p, const Matrix& causal) {
  const int T = causal.rows;
  const int H = p.hidden_dim;
  const int R = p.right_context;
  if (causal.cols != H) {
    throw ValidationError("encode_cascaded: causal dim mismatch");
  }
  Matrix out(T, H);
  Vector pre(H);
  for (int t = 0; t < T; ++t) {
    pre = p.casc_b;
    for (int rr = 0; rr <= R; ++rr) {
      int src = std::min(t + rr, T - 1);
      const double* h = causal.row(src);
      for (int i = 0; i < H; ++i) {
        double hi = h[i];
        if (hi == 0.0) continue;
        const double* row = p.casc_w.row(rr * H + i);
        for (int j = 0; j < H; ++j) pre[j] += row[j] * hi;
      }
    }
    double* o = out.row(t);
    for (int j = 0; j < H; ++j) o[j] = std::tanh(pre[j]);
  }
  return out;
}

Vector prednet(const RnntParams& p, int prev2, int prev1) {
  const int P = p.pred_dim;
  const int V = p.vocab_size();
  auto check = [&](int id) {
    if (id < -1 || id >= V) throw ValidationError("prednet: bad token id");
  };
  check(prev2);
  check(prev1);
  int a_row = prev2 < 0 ? V : prev2;
  int b_row = prev1 < 0 ? V : prev1;
  Vector pre = p.pred_b;
  const double* ea = p.pred_emb.row(a_row);
  const double* eb = p.pred_emb.row(b_row);
  for (int i = 0; i < P; ++i) {
    double ai = ea[i];
    double bi = eb[i];
    const double* row_a = p.pred_w.row(i);
    const double* row_b = p.pred_w.row(P + i);
    for (int j = 0; j < P; ++j) pre[j] += row_a[j] * ai + row_b[j] * bi;
  }
  for (int j = 0; j < P; ++j) pre[j] = std::tanh(pre[j]);
  return pre;
}

Vector joint_logits(const RnntParams& p, const double* h, const Vector& g,
                    JointHead head) {
  HeadRefs hr = head_refs(p, head);
  const int C = static_cast<int>(hr.b->size());
  const int H = p.hidden_dim;
  const int P = p.pred_dim;
  Vector z = *hr.b;
  for (int i = 0; i < H; ++i) {
    double hi = h[i];
    if (hi == 0.0) continue;
    const double* row = hr.w->row(i);
    for (int k = 0; k < C; ++k) z[k] += row[k] * hi;
  }
  for (int j = 0; j < P; ++j) {
    double gj = g[j];
    if (gj == 0.0) continue;
    const double* row = hr.w->row(H + j);
    for (int k = 0; k < C; ++k) z[k] += row[k] * gj;
  }
  return z;
}

void apply_fastemit(RnntLattice* lattice, double lambda) {
  for (double& x : lattice->label_grad.a) x *= (1.0 + lambda);
}

RnntLattice rnnt_loss(const RnntParams& p, const Matrix& frames,
                      const std::vector<int>& labels, JointHead head,
                      double fastemit_lambda, RnntGrads* grads) {
  RnntLattice lat;
  const int T = frames.rows;
  const int U = static_cast<int>(labels.size());
  const bool eos_head = is_eos_head(head);
  for (int id : labels) {
    bool ok =
        (id >= 0 && id < p.vocab_size()) || (eos_head && id == p.eos_id());
    if (!ok) throw ValidationError("rnnt_loss: label id out of range");
  }
  if (T == 0) {
    lat.impossible = U > 0;
    lat.loss = U > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    return lat;
  }

  ForwardTape tape = run_forward(p, frames, labels, head);
  Matrix norm;
  emissions_from_tape(tape, labels, p.blank_id(), &lat.blank_lp,
                      &lat.label_lp, &norm);
  lattice_forward_backward(labels, &lat);
  if (grads) {
    node_gradients(labels, &lat);
    apply_fastemit(&lat, fastemit_lambda);
    backward_to_params(p, frames, labels, head, tape, lat, norm, grads,
                       /*joints_only=*/false);
  }
  return lat;
}

void rnnt_emission_tables(const RnntParams& p, const Matrix& frames,
                          const std::vector<int>& labels, JointHead head,
                          Matrix* blank_lp, Matrix* label_lp) {
  if (frames.rows == 0) {
    throw ValidationError("rnnt_emission_tables: need at least one frame");
  }
  ForwardTape tape = run_forward(p, frames, labels, head);
  Matrix norm;
  emissions_from_tape(tape, labels, p.blank_id(), blank_lp, label_lp, &norm);
}

double rnnt_loss_bruteforce(const Matrix& blank_lp, const Matrix& label_lp) {
  const int T = blank_lp.rows - 1;
  const int U = blank_lp.cols - 1;
  if (label_lp.rows != T + 1 || label_lp.cols != U + 1) {
    throw ValidationError("rnnt_loss_bruteforce: table shape mismatch");
  }
  if (static_cast<long long>(T) * U > 20) {
    throw ValidationError("rnnt_loss_bruteforce: instance too large (T*U > 20)");
  }
  // Depth-first enumeration of every interleaving of T blank steps and
  // U label steps, accumulating path log-probabilities.
  double total = kNegInf;
  struct Node {
    int t, u;
    double lp;
  };
  std::vector<Node> stack;
  stack.push_back({0, 0, 0.0});
  while (!stack.empty()) {
    Node n = stack.back();
    stack.pop_back();
    if (n.t == T && n.u == U) {
      total = logsumexp(total, n.lp);
      continue;
    }
    if (n.t < T) stack.push_back({n.t + 1, n.u, n.lp + blank_lp.at(n.t, n.u)});
    if (n.u < U) stack.push_back({n.t, n.u + 1, n.lp + label_lp.at(n.t, n.u)});
  }
  return -total;
}

namespace {

// Shared batch-SGD loop. eval_one computes loss and accumulates
// gradients for one utterance; update_views selects what moves.
void sgd_train(int n_items, int epochs, int batch_size, double lr,
               double clip, uint64_t seed, RnntParams* params,
               const std::function<double(int, RnntGrads*)>& eval_one,
               const std::function<std::vector<TensorView>(RnntParams*)>&
                   update_views,
               std::vector<TrainLogRow>* log) {
  Rng shuffle_rng(mix_seed(seed, 0x73677464ULL));
  std::vector<int> order(n_items);
  for (int i = 0; i < n_items; ++i) order[i] = i;
  int step = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    shuffle_indices(&order, &shuffle_rng);
    for (int b = 0; b < n_items; b += batch_size) {
      int bend = std::min(n_items, b + batch_size);
      RnntGrads grads{zero_like(*params)};
      double loss_sum = 0.0;
      for (int k = b; k < bend; ++k) loss_sum += eval_one(order[k], &grads);
      double inv = 1.0 / (bend - b);
      auto gviews = tensor_views(&grads.shaped);
      for (auto& v : gviews) {
        for (size_t i = 0; i < v.size; ++i) v.data[i] *= inv;
      }
      double norm = global_norm(gviews);
      double scale = norm > clip ? clip / norm : 1.0;
      auto selected_param = update_views(params);
      auto selected_grad = update_views(&grads.shaped);
      for (size_t vi = 0; vi < selected_param.size(); ++vi) {
        double* pd = selected_param[vi].data;
        const double* gd = selected_grad[vi].data;
        for (size_t i = 0; i < selected_param[vi].size; ++i) {
          pd[i] -= lr * scale * gd[i];
        }
      }
      ++step;
      if (log) log->push_back({step, loss_sum / (bend - b), norm});
    }
  }
}

}  // namespace

RnntParams train_base(const std::vector<SpokenUtterance>& corpus,
                      const std::vector<std::string>& vocab,
                      const RnntHyper& hyper, std::vector<TrainLogRow>* log) {
  hyper.validate();
  if (corpus.empty()) throw ValidationError("train_base: empty corpus");
  const int D = corpus[0].frames.dim();
  RnntParams params = init_rnnt(vocab, D, hyper);

  std::vector<std::vector<int>> ids(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    if (corpus[i].frames.dim() != D) {
      throw ValidationError("train_base: inconsistent frame dims");
    }
    ids[i] = label_ids(params, corpus[i].tokens);
  }

  auto eval_one = [&](int i, RnntGrads* grads) {
    RnntLattice l1 = rnnt_loss(params, corpus[i].frames.frames, ids[i],
                               JointHead::kWp1, hyper.fastemit_lambda, grads);
    RnntLattice l2 = rnnt_loss(params, corpus[i].frames.frames, ids[i],
                               JointHead::kWp2, hyper.fastemit_lambda, grads);
    return l1.loss + l2.loss;
  };
  auto all_views = [](RnntParams* p) { return tensor_views(p); };
  sgd_train(static_cast<int>(corpus.size()), hyper.epochs, hyper.batch_size,
            hyper.learning_rate, hyper.grad_clip_norm, hyper.seed, &params,
            eval_one, all_views, log);
  return params;
}

RnntParams finetune_eos(const RnntParams& base,
                        const std::vector<SpokenUtterance>& corpus,
                        const std::vector<std::vector<uint8_t>>& eos_labels,
                        const RnntHyper& hyper, std::vector<TrainLogRow>* log) {
  hyper.validate();
  if (corpus.size() != eos_labels.size()) {
    throw ValidationError("finetune_eos: corpus/labels length mismatch");
  }
  RnntParams params = base;

  std::vector<std::vector<int>> ids(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    if (eos_labels[i].size() != corpus[i].tokens.size()) {
      throw ValidationError("finetune_eos: label row length mismatch");
    }
    std::vector<int> seq;
    for (size_t k = 0; k < corpus[i].tokens.size(); ++k) {
      int id = params.token_id(corpus[i].tokens[k]);
      if (id < 0) {
        throw ValidationError("finetune_eos: token '" + corpus[i].tokens[k] +
                              "' not in vocabulary");
      }
      seq.push_back(id);
      if (eos_labels[i][k]) seq.push_back(params.eos_id());
    }
    ids[i] = std::move(seq);
  }

  auto eval_one = [&](int i, RnntGrads* grads) {
    // Gradients flow only into the EOS joints; the rest is frozen, so
    // the backward pass can stop at the joint inputs.
    const Matrix& frames = corpus[i].frames.frames;
    double total = 0.0;
    for (JointHead head : {JointHead::kEos1, JointHead::kEos2}) {
      RnntLattice lat;
      ForwardTape tape = run_forward(params, frames, ids[i], head);
      Matrix norm;
      emissions_from_tape(tape, ids[i], params.blank_id(), &lat.blank_lp,
                          &lat.label_lp, &norm);
      lattice_forward_backward(ids[i], &lat);
      node_gradients(ids[i], &lat);
      apply_fastemit(&lat, hyper.fastemit_lambda);
      backward_to_params(params, frames, ids[i], head, tape, lat, norm, grads,
                         /*joints_only=*/true);
      total += lat.loss;
    }
    return total;
  };
  auto eos_views = [](RnntParams* p) {
    auto all = tensor_views(p);
    auto keep = eos_tensor_names();
    std::vector<TensorView> out;
    for (auto& v : all) {
      if (std::find(keep.begin(), keep.end(), v.name) != keep.end()) {
        out.push_back(v);
      }
    }
    return out;
  };
  sgd_train(static_cast<int>(corpus.size()), hyper.epochs, hyper.batch_size,
            hyper.learning_rate, hyper.grad_clip_norm, hyper.seed, &params,
            eval_one, eos_views, log);
  return params;
}

void save_rnnt(const std::string& path, const RnntParams& p) {
  RnntParams copy = p;
  auto views = tensor_views(&copy);
  json tensors = json::object();
  auto shape_of = [&](const std::string& name) -> std::vector<int> {
    const Matrix* ms[] = {&p.enc_in, &p.enc_rec, &p.casc_w, &p.pred_emb,
                          &p.pred_w, &p.wp1_w,   &p.eos1_w, &p.wp2_w,
                          &p.eos2_w};
    const char* mn[] = {"enc_in", "enc_rec", "casc_w", "pred_emb", "pred_w",
                        "wp1_w",  "eos1_w",  "wp2_w",  "eos2_w"};
    for (int i = 0; i < 9; ++i) {
      if (name == mn[i]) return {ms[i]->rows, ms[i]->cols};
    }
    return {};
  };
  for (auto& v : views) {
    std::vector<int> shape = shape_of(v.name);
    if (shape.empty()) shape = {static_cast<int>(v.size)};
    tensors[v.name] = tensor_to_json(v, shape);
  }
  json j{{"kind", "rnnt"},
         {"vocab", p.vocab},
         {"dims",
          {{"input_dim", p.input_dim},
           {"hidden_dim", p.hidden_dim},
           {"pred_dim", p.pred_dim},
           {"right_context", p.right_context}}},
         {"tensors", tensors}};
  std::ofstream out(path);
  if (!out) throw ValidationError("save_rnnt: cannot open " + path);
  out << j.dump(2) << "\n";
}

RnntParams load_rnnt(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_rnnt: cannot open " + path);
  json j = json::parse(in);
  if (j.at("kind").get<std::string>() != "rnnt") {
    throw ValidationError("load_rnnt: not a transducer checkpoint");
  }
  RnntHyper hyper;
  hyper.hidden_dim = j.at("dims").at("hidden_dim").get<int>();
  hyper.pred_dim = j.at("dims").at("pred_dim").get<int>();
  hyper.right_context = j.at("dims").at("right_context").get<int>();
  RnntParams p = init_rnnt(j.at("vocab").get<std::vector<std::string>>(),
                           j.at("dims").at("input_dim").get<int>(), hyper);
  auto views = tensor_views(&p);
  for (auto& v : views) {
    const json& tj = j.at("tensors").at(v.name);
    Vector data = tj.at("data").get<Vector>();
    if (data.size() != v.size) {
      throw ValidationError("load_rnnt: tensor size mismatch for " + v.name);
    }
    std::copy(data.begin(), data.end(), v.data);
  }
  return p;
}

}  // namespace segstream
