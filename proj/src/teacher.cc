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

#include "segstream/teacher.hh"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

namespace segstream {

namespace {

using nlohmann::json;

constexpr const char* kUnkToken = "<unk>";

// Full forward activations of one window; enough to run BPTT.
struct TeacherTape {
  int w = 0;
  std::vector<int> ids;
  Matrix hf, hb;              // [w x H]
  Matrix d;                   // [w x H_d]
  std::vector<uint8_t> hist;  // label consumed at step t (y_{t-1})
  Matrix z;                   // [w x 2]
  std::vector<double> p_eos;
  std::vector<uint8_t> decisions;  // greedy y_t at each step
};

// Runs the bidirectional encoder and the label decoder. The decoder
// consumes `forced` labels when given, otherwise its own decisions
// (with `bias` added to the <EOS> logit before the comparison).
TeacherTape run_teacher(const TeacherParams& p,
                        const std::vector<std::string>& tokens,
                        const std::vector<uint8_t>* forced, double bias) {
  if (forced && forced->size() != tokens.size()) {
    throw ValidationError("teacher: forced history length mismatch");
  }
  TeacherTape tape;
  const int w = static_cast<int>(tokens.size());
  const int E = p.embed_dim;
  const int H = p.hidden_dim;
  const int Hd = p.dec_dim;
  tape.w = w;
  if (w == 0) return tape;

  tape.ids.resize(w);
  for (int t = 0; t < w; ++t) tape.ids[t] = p.token_id(tokens[t]);

  tape.hf = Matrix(w, H);
  tape.hb = Matrix(w, H);
  Vector pre(H);
  for (int t = 0; t < w; ++t) {
    pre = p.fwd_b;
    const double* e = p.embedding.row(tape.ids[t]);
    for (int i = 0; i < E; ++i) {
      const double* row = p.fwd_in.row(i);
      for (int j = 0; j < H; ++j) pre[j] += row[j] * e[i];
    }
    if (t > 0) {
      const double* hp = tape.hf.row(t - 1);
      for (int i = 0; i < H; ++i) {
        const double* row = p.fwd_rec.row(i);
        for (int j = 0; j < H; ++j) pre[j] += row[j] * hp[i];
      }
    }
    double* out = tape.hf.row(t);
    for (int j = 0; j < H; ++j) out[j] = std::tanh(pre[j]);
  }
  for (int t = w - 1; t >= 0; --t) {
    pre = p.bwd_b;
    const double* e = p.embedding.row(tape.ids[t]);
    for (int i = 0; i < E; ++i) {
      const double* row = p.bwd_in.row(i);
      for (int j = 0; j < H; ++j) pre[j] += row[j] * e[i];
    }
    if (t < w - 1) {
      const double* hn = tape.hb.row(t + 1);
      for (int i = 0; i < H; ++i) {
        const double* row = p.bwd_rec.row(i);
        for (int j = 0; j < H; ++j) pre[j] += row[j] * hn[i];
      }
    }
    double* out = tape.hb.row(t);
    for (int j = 0; j < H; ++j) out[j] = std::tanh(pre[j]);
  }

  tape.d = Matrix(w, Hd);
  tape.hist.resize(w);
  tape.z = Matrix(w, 2);
  tape.p_eos.resize(w);
  tape.decisions.resize(w);
  Vector dpre(Hd);
  uint8_t prev = 0;  // epsilon start
  for (int t = 0; t < w; ++t) {
    tape.hist[t] = prev;
    dpre = p.dec_b;
    const double* le = p.lab_emb.row(prev);
    for (int i = 0; i < Hd; ++i) {
      const double* row = p.dec_in.row(i);
      for (int j = 0; j < Hd; ++j) dpre[j] += row[j] * le[i];
    }
    if (t > 0) {
      const double* dp = tape.d.row(t - 1);
      for (int i = 0; i < Hd; ++i) {
        const double* row = p.dec_rec.row(i);
        for (int j = 0; j < Hd; ++j) dpre[j] += row[j] * dp[i];
      }
    }
    double* dt = tape.d.row(t);
    for (int j = 0; j < Hd; ++j) dt[j] = std::tanh(dpre[j]);

    double z0 = p.out_b[0];
    double z1 = p.out_b[1];
    const double* hf = tape.hf.row(t);
    const double* hb = tape.hb.row(t);
    for (int i = 0; i < H; ++i) {
      z0 += p.out_w.at(i, 0) * hf[i] + p.out_w.at(H + i, 0) * hb[i];
      z1 += p.out_w.at(i, 1) * hf[i] + p.out_w.at(H + i, 1) * hb[i];
    }
    for (int i = 0; i < Hd; ++i) {
      z0 += p.out_w.at(2 * H + i, 0) * dt[i];
      z1 += p.out_w.at(2 * H + i, 1) * dt[i];
    }
    tape.z.at(t, 0) = z0;
    tape.z.at(t, 1) = z1;
    double m = std::max(z0, z1);
    double denom = std::exp(z0 - m) + std::exp(z1 - m);
    tape.p_eos[t] = std::exp(z1 - m) / denom;
    tape.decisions[t] = (z1 + bias > z0) ? 1 : 0;
    prev = forced ? (*forced)[t] : tape.decisions[t];
  }
  return tape;
}

TeacherParams zero_like(const TeacherParams& p) {
  TeacherParams z = p;
  for (auto& v : teacher_tensor_views(&z)) {
    std::fill(v.data, v.data + v.size, 0.0);
  }
  return z;
}

// Accumulates d(sum of per-token cross-entropies)/d(params) of one
// teacher-forced window into `g`. Returns the summed cross-entropy.
double window_backward(const TeacherParams& p, const TeacherTape& tape,
                       const std::vector<uint8_t>& gold, TeacherParams* g) {
  const int w = tape.w;
  const int E = p.embed_dim;
  const int H = p.hidden_dim;
  const int Hd = p.dec_dim;
  double loss = 0.0;
  if (w == 0) return loss;

  Matrix dhf(w, H), dhb(w, H), dd(w, Hd), de(w, E);
  for (int t = 0; t < w; ++t) {
    double p1 = tape.p_eos[t];
    loss -= gold[t] ? std::log(p1) : std::log(1.0 - p1);
    double dz0 = (1.0 - p1) - (gold[t] ? 0.0 : 1.0);
    double dz1 = p1 - (gold[t] ? 1.0 : 0.0);
    g->out_b[0] += dz0;
    g->out_b[1] += dz1;
    const double* hf = tape.hf.row(t);
    const double* hb = tape.hb.row(t);
    const double* dt = tape.d.row(t);
    for (int i = 0; i < H; ++i) {
      g->out_w.at(i, 0) += hf[i] * dz0;
      g->out_w.at(i, 1) += hf[i] * dz1;
      g->out_w.at(H + i, 0) += hb[i] * dz0;
      g->out_w.at(H + i, 1) += hb[i] * dz1;
      dhf.at(t, i) = p.out_w.at(i, 0) * dz0 + p.out_w.at(i, 1) * dz1;
      dhb.at(t, i) = p.out_w.at(H + i, 0) * dz0 + p.out_w.at(H + i, 1) * dz1;
    }
    for (int i = 0; i < Hd; ++i) {
      g->out_w.at(2 * H + i, 0) += dt[i] * dz0;
      g->out_w.at(2 * H + i, 1) += dt[i] * dz1;
      dd.at(t, i) = p.out_w.at(2 * H + i, 0) * dz0 + p.out_w.at(2 * H + i, 1) * dz1;
    }
  }

  // Decoder BPTT, end to start.
  {
    Vector carry(Hd, 0.0), da(Hd);
    for (int t = w - 1; t >= 0; --t) {
      const double* dt = tape.d.row(t);
      for (int j = 0; j < Hd; ++j) {
        da[j] = (1.0 - dt[j] * dt[j]) * (dd.at(t, j) + carry[j]);
      }
      const double* le = p.lab_emb.row(tape.hist[t]);
      double* dle = g->lab_emb.row(tape.hist[t]);
      for (int i = 0; i < Hd; ++i) {
        double* grow = g->dec_in.row(i);
        const double* prow = p.dec_in.row(i);
        double acc = 0.0;
        for (int j = 0; j < Hd; ++j) {
          grow[j] += le[i] * da[j];
          acc += prow[j] * da[j];
        }
        dle[i] += acc;
      }
      if (t > 0) {
        const double* dp = tape.d.row(t - 1);
        for (int i = 0; i < Hd; ++i) {
          double* grow = g->dec_rec.row(i);
          for (int j = 0; j < Hd; ++j) grow[j] += dp[i] * da[j];
        }
      }
      for (int j = 0; j < Hd; ++j) g->dec_b[j] += da[j];
      std::fill(carry.begin(), carry.end(), 0.0);
      for (int i = 0; i < Hd; ++i) {
        const double* prow = p.dec_rec.row(i);
        double acc = 0.0;
        for (int j = 0; j < Hd; ++j) acc += prow[j] * da[j];
        carry[i] = acc;
      }
    }
  }

  // Forward-direction BPTT, end to start.
  {
    Vector carry(H, 0.0), da(H);
    for (int t = w - 1; t >= 0; --t) {
      const double* ht = tape.hf.row(t);
      for (int j = 0; j < H; ++j) {
        da[j] = (1.0 - ht[j] * ht[j]) * (dhf.at(t, j) + carry[j]);
      }
      const double* e = p.embedding.row(tape.ids[t]);
      double* det = de.row(t);
      for (int i = 0; i < E; ++i) {
        double* grow = g->fwd_in.row(i);
        const double* prow = p.fwd_in.row(i);
        double acc = 0.0;
        for (int j = 0; j < H; ++j) {
          grow[j] += e[i] * da[j];
          acc += prow[j] * da[j];
        }
        det[i] += acc;
      }
      if (t > 0) {
        const double* hp = tape.hf.row(t - 1);
        for (int i = 0; i < H; ++i) {
          double* grow = g->fwd_rec.row(i);
          for (int j = 0; j < H; ++j) grow[j] += hp[i] * da[j];
        }
      }
      for (int j = 0; j < H; ++j) g->fwd_b[j] += da[j];
      std::fill(carry.begin(), carry.end(), 0.0);
      for (int i = 0; i < H; ++i) {
        const double* prow = p.fwd_rec.row(i);
        double acc = 0.0;
        for (int j = 0; j < H; ++j) acc += prow[j] * da[j];
        carry[i] = acc;
      }
    }
  }

  // Backward-direction BPTT runs in reversed time, start to end.
  {
    Vector carry(H, 0.0), da(H);
    for (int t = 0; t < w; ++t) {
      const double* ht = tape.hb.row(t);
      for (int j = 0; j < H; ++j) {
        da[j] = (1.0 - ht[j] * ht[j]) * (dhb.at(t, j) + carry[j]);
      }
      const double* e = p.embedding.row(tape.ids[t]);
      double* det = de.row(t);
      for (int i = 0; i < E; ++i) {
        double* grow = g->bwd_in.row(i);
        const double* prow = p.bwd_in.row(i);
        double acc = 0.0;
        for (int j = 0; j < H; ++j) {
          grow[j] += e[i] * da[j];
          acc += prow[j] * da[j];
        }
        det[i] += acc;
      }
      if (t < w - 1) {
        const double* hn = tape.hb.row(t + 1);
        for (int i = 0; i < H; ++i) {
          double* grow = g->bwd_rec.row(i);
          for (int j = 0; j < H; ++j) grow[j] += hn[i] * da[j];
        }
      }
      for (int j = 0; j < H; ++j) g->bwd_b[j] += da[j];
      std::fill(carry.begin(), carry.end(), 0.0);
      for (int i = 0; i < H; ++i) {
        const double* prow = p.bwd_rec.row(i);
        double acc = 0.0;
        for (int j = 0; j < H; ++j) acc += prow[j] * da[j];
        carry[i] = acc;
      }
    }
  }

  for (int t = 0; t < w; ++t) {
    double* drow = g->embedding.row(tape.ids[t]);
    const double* det = de.row(t);
    for (int i = 0; i < E; ++i) drow[i] += det[i];
  }
  return loss;
}

}  // namespace

void TeacherHyper::validate() const {
  if (embed_dim < 1) throw ValidationError("teacher.embed_dim: must be >= 1");
  if (hidden_dim < 1) throw ValidationError("teacher.hidden_dim: must be >= 1");
  if (dec_dim < 1) throw ValidationError("teacher.dec_dim: must be >= 1");
  if (learning_rate < 0.0) {
    throw ValidationError("teacher.learning_rate: must be >= 0");
  }
  if (epochs < 0) throw ValidationError("teacher.epochs: must be >= 0");
  if (batch_size < 1) throw ValidationError("teacher.batch_size: must be >= 1");
  if (grad_clip_norm <= 0.0) {
    throw ValidationError("teacher.grad_clip_norm: must be > 0");
  }
  if (window < 1) throw ValidationError("teacher.window: must be >= 1");
  if (overlap < 0 || overlap >= window) {
    throw ValidationError("teacher.overlap: must be in [0, window)");
  }
}

int TeacherParams::token_id(const std::string& tok) const {
  auto it = std::lower_bound(vocab.begin() + 1, vocab.end(), tok);
  if (it != vocab.end() && *it == tok) {
    return static_cast<int>(it - vocab.begin());
  }
  return 0;
}

std::vector<TensorView> teacher_tensor_views(TeacherParams* p) {
  auto mv = [](const char* name, Matrix& m) {
    return TensorView{name, m.a.data(), m.a.size()};
  };
  auto vv = [](const char* name, Vector& v) {
    return TensorView{name, v.data(), v.size()};
  };
  return {
      mv("embedding", p->embedding), mv("fwd_in", p->fwd_in),
      mv("fwd_rec", p->fwd_rec),     vv("fwd_b", p->fwd_b),
      mv("bwd_in", p->bwd_in),       mv("bwd_rec", p->bwd_rec),
      vv("bwd_b", p->bwd_b),         mv("lab_emb", p->lab_emb),
      mv("dec_in", p->dec_in),       mv("dec_rec", p->dec_rec),
      vv("dec_b", p->dec_b),         mv("out_w", p->out_w),
      vv("out_b", p->out_b),
  };
}

TeacherParams init_teacher(const std::vector<std::string>& vocab,
                           const TeacherHyper& hyper) {
  hyper.validate();
  if (vocab.empty() || vocab[0] != kUnkToken) {
    throw ValidationError("init_teacher: vocab row 0 must be the unknown slot");
  }
  if (!std::is_sorted(vocab.begin() + 1, vocab.end())) {
    throw ValidationError("init_teacher: vocab rows 1.. must be sorted");
  }
  TeacherParams p;
  p.vocab = vocab;
  p.embed_dim = hyper.embed_dim;
  p.hidden_dim = hyper.hidden_dim;
  p.dec_dim = hyper.dec_dim;
  p.window = hyper.window;
  p.overlap = hyper.overlap;

  const int V = p.vocab_size();
  const int E = p.embed_dim;
  const int H = p.hidden_dim;
  const int Hd = p.dec_dim;
  p.embedding = Matrix(V, E);
  p.fwd_in = Matrix(E, H);
  p.fwd_rec = Matrix(H, H);
  p.fwd_b.assign(H, 0.0);
  p.bwd_in = Matrix(E, H);
  p.bwd_rec = Matrix(H, H);
  p.bwd_b.assign(H, 0.0);
  p.lab_emb = Matrix(2, Hd);
  p.dec_in = Matrix(Hd, Hd);
  p.dec_rec = Matrix(Hd, Hd);
  p.dec_b.assign(Hd, 0.0);
  p.out_w = Matrix(2 * H + Hd, 2);
  p.out_b.assign(2, 0.0);

  Rng rng(mix_seed(hyper.seed, 0x7463687258ULL));
  for (double& x : p.embedding.a) x = rng.gaussian(0.0, 0.5);
  for (double& x : p.lab_emb.a) x = rng.gaussian(0.0, 0.5);
  auto fill = [&](Matrix& m) {
    double scale = 1.0 / std::sqrt(static_cast<double>(m.rows));
    for (double& x : m.a) x = rng.gaussian(0.0, scale);
  };
  fill(p.fwd_in);
  fill(p.fwd_rec);
  fill(p.bwd_in);
  fill(p.bwd_rec);
  fill(p.dec_in);
  fill(p.dec_rec);
  fill(p.out_w);
  return p;
}

std::vector<double> teacher_forward(const TeacherParams& p,
                                    const std::vector<std::string>& tokens,
                                    const std::vector<uint8_t>* forced) {
  return run_teacher(p, tokens, forced, 0.0).p_eos;
}

std::vector<uint8_t> teacher_predict(const TeacherParams& p,
                                     const std::vector<std::string>& tokens,
                                     double bias) {
  const int n = static_cast<int>(tokens.size());
  if (n <= p.window) {
    return run_teacher(p, tokens, nullptr, bias).decisions;
  }
  AnnotatedTranscript tr;
  tr.tokens = tokens;
  std::vector<Window> windows = make_windows(tr, p.window, p.overlap);
  for (auto& win : windows) {
    win.labels = run_teacher(p, win.tokens, nullptr, bias).decisions;
  }
  return merge_window_predictions(windows, n);
}

TeacherParams teacher_train(const std::vector<Window>& corpus,
                            const TeacherHyper& hyper,
                            std::vector<TrainLogRow>* log) {
  hyper.validate();
  if (corpus.empty()) throw ValidationError("teacher_train: empty corpus");
  std::set<std::string> words;
  for (const auto& win : corpus) {
    if (win.labels.size() != win.tokens.size()) {
      throw ValidationError("teacher_train: window labels/tokens mismatch");
    }
    words.insert(win.tokens.begin(), win.tokens.end());
  }
  std::vector<std::string> vocab;
  vocab.push_back(kUnkToken);
  for (const auto& wd : words) {
    if (wd != kUnkToken) vocab.push_back(wd);
  }
  TeacherParams params = init_teacher(vocab, hyper);

  Rng shuffle_rng(mix_seed(hyper.seed, 0x74736764ULL));
  const int n = static_cast<int>(corpus.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  int step = 0;
  double last_loss = 0.0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle_indices(&order, &shuffle_rng);
    for (int b = 0; b < n; b += hyper.batch_size) {
      int bend = std::min(n, b + hyper.batch_size);
      TeacherParams grads = zero_like(params);
      double loss_sum = 0.0;
      long n_tokens = 0;
      for (int k = b; k < bend; ++k) {
        const Window& win = corpus[order[k]];
        TeacherTape tape = run_teacher(params, win.tokens, &win.labels, 0.0);
        loss_sum += window_backward(params, tape, win.labels, &grads);
        n_tokens += static_cast<long>(win.tokens.size());
      }
      if (n_tokens == 0) continue;
      double inv = 1.0 / static_cast<double>(n_tokens);
      auto gviews = teacher_tensor_views(&grads);
      for (auto& v : gviews) {
        for (size_t i = 0; i < v.size; ++i) v.data[i] *= inv;
      }
      double norm = global_norm(gviews);
      double scale = norm > hyper.grad_clip_norm ? hyper.grad_clip_norm / norm
                                                 : 1.0;
      auto pviews = teacher_tensor_views(&params);
      for (size_t vi = 0; vi < pviews.size(); ++vi) {
        for (size_t i = 0; i < pviews[vi].size; ++i) {
          pviews[vi].data[i] -= hyper.learning_rate * scale * gviews[vi].data[i];
        }
      }
      ++step;
      last_loss = loss_sum * inv;
      if (!std::isfinite(last_loss)) {
        throw InternalError("teacher_train: non-finite loss at step " +
                            std::to_string(step));
      }
      if (log) log->push_back({step, last_loss, norm});
    }
  }
  params.final_train_loss = last_loss;
  return params;
}

TeacherEval teacher_eval(const TeacherParams& p,
                         const std::vector<Window>& data) {
  if (data.empty()) throw ValidationError("teacher_eval: empty data");
  long correct = 0, total = 0, full = 0;
  long tp = 0, n_pred = 0, n_ref = 0;
  for (const auto& win : data) {
    if (win.labels.size() != win.tokens.size()) {
      throw ValidationError("teacher_eval: window labels/tokens mismatch");
    }
    std::vector<uint8_t> pred = teacher_predict(p, win.tokens, 0.0);
    bool all = true;
    for (size_t i = 0; i < pred.size(); ++i) {
      bool ok = pred[i] == win.labels[i];
      correct += ok;
      all = all && ok;
      n_pred += pred[i] != 0;
      n_ref += win.labels[i] != 0;
      tp += (pred[i] != 0 && win.labels[i] != 0);
    }
    total += static_cast<long>(pred.size());
    full += all;
  }
  TeacherEval ev;
  ev.label_accuracy = total ? static_cast<double>(correct) / total : 1.0;
  ev.full_sequence_accuracy = static_cast<double>(full) / data.size();
  if (n_pred == 0 && n_ref == 0) {
    ev.f1 = 1.0;
  } else if (n_pred == 0 || n_ref == 0 || tp == 0) {
    ev.f1 = 0.0;
  } else {
    double prec = static_cast<double>(tp) / n_pred;
    double rec = static_cast<double>(tp) / n_ref;
    ev.f1 = 2.0 * prec * rec / (prec + rec);
  }
  return ev;
}

std::vector<uint8_t> pause_teacher_annotate(
    const std::vector<std::string>& tokens, const Alignment& alignment,
    const FrameSequence& frames, double silence_threshold_ms) {
  const int n = static_cast<int>(tokens.size());
  if (static_cast<int>(alignment.entries.size()) != n) {
    throw ValidationError("pause_teacher_annotate: alignment/token mismatch");
  }
  std::vector<uint8_t> labels(n, 0);
  for (int i = 0; i < n; ++i) {
    if (alignment.entries[i].token_index != i) {
      throw ValidationError("pause_teacher_annotate: alignment out of order");
    }
    int gap_frames = (i + 1 < n)
                         ? alignment.entries[i + 1].start_frame -
                               alignment.entries[i].end_frame
                         : frames.n_frames() - alignment.entries[i].end_frame;
    double gap_ms = gap_frames * frames.frame_ms;
    labels[i] = (gap_ms >= silence_threshold_ms && gap_ms > 0.0) ? 1 : 0;
  }
  return labels;
}

void save_teacher(const std::string& path, const TeacherParams& p) {
  TeacherParams copy = p;
  json tensors = json::object();
  auto shape_of = [&](const std::string& name) -> std::vector<int> {
    const Matrix* ms[] = {&p.embedding, &p.fwd_in,  &p.fwd_rec, &p.bwd_in,
                          &p.bwd_rec,   &p.lab_emb, &p.dec_in,  &p.dec_rec,
                          &p.out_w};
    const char* mn[] = {"embedding", "fwd_in", "fwd_rec", "bwd_in", "bwd_rec",
                        "lab_emb",   "dec_in", "dec_rec", "out_w"};
    for (int i = 0; i < 9; ++i) {
      if (name == mn[i]) return {ms[i]->rows, ms[i]->cols};
    }
    return {};
  };
  for (auto& v : teacher_tensor_views(&copy)) {
    std::vector<int> shape = shape_of(v.name);
    if (shape.empty()) shape = {static_cast<int>(v.size)};
    tensors[v.name] = json{
        {"shape", shape},
        {"data", std::vector<double>(v.data, v.data + v.size)}};
  }
  json j{{"kind", "teacher"},
         {"vocab", p.vocab},
         {"dims",
          {{"embed_dim", p.embed_dim},
           {"hidden_dim", p.hidden_dim},
           {"dec_dim", p.dec_dim},
           {"window", p.window},
           {"overlap", p.overlap}}},
         {"final_train_loss", p.final_train_loss},
         {"tensors", tensors}};
  std::ofstream out(path);
  if (!out) throw ValidationError("save_teacher: cannot open " + path);
  out << j.dump(2) << "\n";
}

TeacherParams load_teacher(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_teacher: cannot open " + path);
  json j = json::parse(in);
  if (j.at("kind").get<std::string>() != "teacher") {
    throw ValidationError("load_teacher: not a teacher checkpoint");
  }
  TeacherHyper hyper;
  hyper.embed_dim = j.at("dims").at("embed_dim").get<int>();
  hyper.hidden_dim = j.at("dims").at("hidden_dim").get<int>();
  hyper.dec_dim = j.at("dims").at("dec_dim").get<int>();
  hyper.window = j.at("dims").at("window").get<int>();
  hyper.overlap = j.at("dims").at("overlap").get<int>();
  TeacherParams p =
      init_teacher(j.at("vocab").get<std::vector<std::string>>(), hyper);
  p.final_train_loss = j.at("final_train_loss").get<double>();
  for (auto& v : teacher_tensor_views(&p)) {
    const json& tj = j.at("tensors").at(v.name);
    Vector data = tj.at("data").get<Vector>();
    if (data.size() != v.size) {
      throw ValidationError("load_teacher: tensor size mismatch for " + v.name);
    }
    std::copy(data.begin(), data.end(), v.data);
  }
  return p;
}

}  // namespace segstream
