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

#include "segstream/decoder.hh"

#include <algorithm>
#include <cmath>
#include <map>

namespace segstream {

namespace {

// Orders by score descending, then token sequence ascending, so every
// sort in the decoder is deterministic.
bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

// Per-call cache of prediction vectors and joint logits, keyed by the
// two-token context. The encoder part of the joint is shared by every
// hypothesis at one frame, so it is folded in once.
class FrameJoint {
 public:
  FrameJoint(const RnntParams& params, const double* h, JointHead head)
      : params_(params), head_(head) {
    const Matrix& w = head == JointHead::kWp1   ? params.wp1_w
                      : head == JointHead::kEos1 ? params.eos1_w
                      : head == JointHead::kWp2  ? params.wp2_w
                                                 : params.eos2_w;
    const Vector& b = head == JointHead::kWp1   ? params.wp1_b
                      : head == JointHead::kEos1 ? params.eos1_b
                      : head == JointHead::kWp2  ? params.wp2_b
                                                 : params.eos2_b;
    w_ = &w;
    const int C = static_cast<int>(b.size());
    jh_ = b;
    for (int i = 0; i < params.hidden_dim; ++i) {
      double hi = h[i];
      if (hi == 0.0) continue;
      const double* row = w.row(i);
      for (int k = 0; k < C; ++k) jh_[k] += row[k] * hi;
    }
  }

  // Log-softmaxed logits for a context; cached across hypotheses.
  const Vector& log_probs(const std::array<int, 2>& ctx) {
    auto it = cache_.find(ctx);
    if (it != cache_.end()) return it->second;
    Vector g = prednet(params_, ctx[0], ctx[1]);
    const int C = static_cast<int>(jh_.size());
    Vector z = jh_;
    for (int j = 0; j < params_.pred_dim; ++j) {
      double gj = g[j];
      if (gj == 0.0) continue;
      const double* row = w_->row(params_.hidden_dim + j);
      for (int k = 0; k < C; ++k) z[k] += row[k] * gj;
    }
    Vector lp(C);
    log_softmax(z.data(), C, lp.data());
    return cache_.emplace(ctx, std::move(lp)).first->second;
  }

 private:
  const RnntParams& params_;
  JointHead head_;
  const Matrix* w_;
  Vector jh_;
  std::map<std::array<int, 2>, Vector> cache_;
};

// Sorts, merges duplicate token sequences keeping the best score, and
// truncates to `limit`.
void dedup_and_truncate(std::vector<Hypothesis>* hyps, int limit) {
  std::sort(hyps->begin(), hyps->end(),
            [](const Hypothesis& a, const Hypothesis& b) {
              if (a.tokens != b.tokens) return a.tokens < b.tokens;
              return a.log_prob > b.log_prob;
            });
  hyps->erase(std::unique(hyps->begin(), hyps->end(),
                          [](const Hypothesis& a, const Hypothesis& b) {
                            return a.tokens == b.tokens;
                          }),
              hyps->end());
  std::sort(hyps->begin(), hyps->end(), better);
  if (static_cast<int>(hyps->size()) > limit) hyps->resize(limit);
}

// Cascaded-encoder output row j where the causal stream is treated as
// ending at `clamp` (dummy right-context frames repeat that row).
Vector cascade_row(const RnntParams& p, const Matrix& causal, int j,
                   int clamp) {
  const int H = p.hidden_dim;
  Vector pre = p.casc_b;
  for (int r = 0; r <= p.right_context; ++r) {
    int src = std::min(j + r, clamp);
    const double* h = causal.row(src);
    for (int i = 0; i < H; ++i) {
      double hi = h[i];
      if (hi == 0.0) continue;
      const double* row = p.casc_w.row(r * H + i);
      for (int k = 0; k < H; ++k) pre[k] += row[k] * hi;
    }
  }
  for (int k = 0; k < H; ++k) pre[k] = std::tanh(pre[k]);
  return pre;
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_size_pass1 < 1) {
    throw ValidationError("decode.beam_size_pass1: must be >= 1");
  }
  if (beam_size_pass2 < 1) {
    throw ValidationError("decode.beam_size_pass2: must be >= 1");
  }
  if (pruning_threshold < 0.0) {
    throw ValidationError("decode.pruning_threshold: must be >= 0");
  }
  if (max_expansion_depth < 0) {
    throw ValidationError("decode.max_expansion_depth: must be >= 0");
  }
  if (eos_threshold < 0.0) {
    throw ValidationError("decode.eos_threshold: must be >= 0");
  }
  if (max_segment_s <= 0.0) {
    throw ValidationError("decode.max_segment_s: must be > 0");
  }
  if (mode < 1 || mode > 3) {
    throw ValidationError("decode.mode: must be 1, 2, or 3");
  }
  if (vad_energy_threshold < 0.0) {
    throw ValidationError("decode.vad_energy_threshold: must be >= 0");
  }
  if (vad_initial_keep_ms < 0.0) {
    throw ValidationError("decode.vad_initial_keep_ms: must be >= 0");
  }
}

std::string cause_name(BoundaryCause cause) {
  switch (cause) {
    case BoundaryCause::kEos: return "eos";
    case BoundaryCause::kVad: return "vad";
    case BoundaryCause::kFixed: return "fixed";
    case BoundaryCause::kForced: return "forced";
    case BoundaryCause::kEndOfAudio: return "end-of-audio";
  }
  throw InternalError("cause_name: bad cause");
}

VadResult vad_filter(const FrameSequence& frames, double energy_threshold,
                     double initial_keep_ms) {
  const int T = frames.n_frames();
  const int D = frames.dim();
  const int keep_budget = static_cast<int>(
      std::ceil(initial_keep_ms / frames.frame_ms));
  VadResult res;
  res.silence.resize(T);
  res.kept.resize(T);
  int run = 0;
  int n_kept = 0;
  for (int t = 0; t < T; ++t) {
    double energy = 0.0;
    const double* x = frames.frames.row(t);
    for (int i = 0; i < D; ++i) energy += x[i] * x[i];
    bool silent = energy < energy_threshold;
    res.silence[t] = silent;
    run = silent ? run + 1 : 0;
    bool keep = !silent || run <= keep_budget;
    res.kept[t] = keep;
    n_kept += keep;
  }
  res.filtered = Matrix(n_kept, D);
  res.orig_index.reserve(n_kept);
  int j = 0;
  for (int t = 0; t < T; ++t) {
    if (!res.kept[t]) continue;
    std::copy(frames.frames.row(t), frames.frames.row(t) + D,
              res.filtered.row(j));
    res.orig_index.push_back(t);
    ++j;
  }
  return res;
}

namespace {

// True when no completion from a deeper level can still enter the
// result: the k-th best finished score strictly dominates the best
// frontier score (scores only fall with depth) and the band prune
// would drop anything at the frontier's level anyway.
bool deeper_levels_hopeless(const std::vector<Hypothesis>& completed,
                            double frontier_best, int beam_size,
                            double pruning_threshold) {
  if (static_cast<int>(completed.size()) < beam_size) return false;
  std::vector<double> scores;
  scores.reserve(completed.size());
  for (const auto& hyp : completed) scores.push_back(hyp.log_prob);
  std::nth_element(scores.begin(), scores.begin() + (beam_size - 1),
                   scores.end(), std::greater<double>());
  double kth = scores[beam_size - 1];
  double best = *std::max_element(scores.begin(), scores.end());
  return kth > frontier_best && best - frontier_best > pruning_threshold;
}

}  // namespace

std::vector<Hypothesis> step_beam(const std::vector<Hypothesis>& beam,
                                  const RnntParams& params, const double* h,
                                  JointHead head, int beam_size,
                                  double pruning_threshold,
                                  int max_expansion_depth) {
  if (beam.empty()) throw ValidationError("step_beam: empty beam");
  if (is_eos_head(head)) {
    throw ValidationError("step_beam: wordpiece heads only");
  }
  const int V = params.vocab_size();
  const int blank = params.blank_id();
  FrameJoint joint(params, h, head);

  struct Cand {
    double score;
    int parent;
    int label;
  };
  std::vector<Hypothesis> completed;
  std::vector<Hypothesis> frontier = beam;
  std::vector<Cand> cands;
  std::vector<Hypothesis> survivors;
  for (int depth = 0; depth <= max_expansion_depth && !frontier.empty();
       ++depth) {
    cands.clear();
    for (int pi = 0; pi < static_cast<int>(frontier.size()); ++pi) {
      const Hypothesis& hyp = frontier[pi];
      const Vector& lp = joint.log_probs(hyp.pred_context);
      Hypothesis done = hyp;
      done.log_prob += lp[blank];
      completed.push_back(std::move(done));
      if (depth == max_expansion_depth) continue;
      for (int v = 0; v < V; ++v) {
        cands.push_back({hyp.log_prob + lp[v], pi, v});
      }
    }
    if (cands.empty()) break;

    // Score-only cut to a superset of the next level (ties at the cut
    // score all survive so the exact lexicographic order below decides).
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.label < b.label;
    });
    size_t keep = cands.size();
    if (static_cast<int>(keep) > beam_size) {
      double cut = cands[beam_size - 1].score;
      keep = beam_size;
      while (keep < cands.size() && cands[keep].score == cut) ++keep;
    }
    double frontier_best = cands[0].score;
    if (deeper_levels_hopeless(completed, frontier_best, beam_size,
                               pruning_threshold)) {
      break;
    }
    survivors.clear();
    for (size_t c = 0; c < keep; ++c) {
      const Hypothesis& parent = frontier[cands[c].parent];
      Hypothesis ext = parent;
      ext.tokens.push_back(cands[c].label);
      ext.log_prob = cands[c].score;
      ext.pred_context = {parent.pred_context[1], cands[c].label};
      survivors.push_back(std::move(ext));
    }
    dedup_and_truncate(&survivors, beam_size);
    frontier = survivors;
  }

  dedup_and_truncate(&completed, beam_size);
  double best = completed.front().log_prob;
  while (!completed.empty() &&
         best - completed.back().log_prob > pruning_threshold) {
    completed.pop_back();
  }
  return completed;
}

double eos_neg_log_posterior(const RnntParams& params, const double* h,
                             const Hypothesis& top, JointHead eos_head) {
  if (!is_eos_head(eos_head)) {
    throw ValidationError("eos_neg_log_posterior: EOS heads only");
  }
  Vector g = prednet(params, top.pred_context[0], top.pred_context[1]);
  Vector z = joint_logits(params, h, g, eos_head);
  double lse = logsumexp(z.data(), static_cast<int>(z.size()));
  return -(z[params.eos_id()] - lse);
}

Matrix inject_dummy_frames(const Matrix& causal_prefix, int right_context) {
  if (causal_prefix.rows == 0) {
    throw ValidationError("inject_dummy_frames: empty prefix");
  }
  if (right_context < 0) {
    throw ValidationError("inject_dummy_frames: negative right context");
  }
  Matrix out(causal_prefix.rows + right_context, causal_prefix.cols);
  std::copy(causal_prefix.a.begin(), causal_prefix.a.end(), out.a.begin());
  const double* last = causal_prefix.row(causal_prefix.rows - 1);
  for (int r = 0; r < right_context; ++r) {
    std::copy(last, last + causal_prefix.cols,
              out.row(causal_prefix.rows + r));
  }
  return out;
}

bool force_finalize_check(int elapsed_frames, double frame_ms,
                          double max_segment_s) {
  return elapsed_frames * frame_ms >= max_segment_s * 1000.0;
}

SegmentationOutput decode_stream(const RnntParams& params,
                                 const FrameSequence& frames,
                                 const DecodeConfig& cfg) {
  cfg.validate();
  SegmentationOutput out;
  out.total_frames = frames.n_frames();
  out.frame_ms = frames.frame_ms;
  const int T = frames.n_frames();
  if (T == 0) return out;

  VadResult vad =
      vad_filter(frames, cfg.vad_energy_threshold, cfg.vad_initial_keep_ms);
  if (!cfg.use_vad_filter) {
    // Keep everything; silence flags still feed the vad segmenter.
    vad.filtered = frames.frames;
    vad.orig_index.resize(T);
    for (int t = 0; t < T; ++t) vad.orig_index[t] = t;
    std::fill(vad.kept.begin(), vad.kept.end(), 1);
  }
  const Matrix& feat = vad.filtered;
  const int J = feat.rows;
  const int R = params.right_context;

  // One causal pass over the kept frames; segment boundaries never
  // reset this state, so the carry-over is implicit.
  Matrix causal = encode_causal(params, feat, nullptr).outputs;
  // Mode 2 consumes precomputed cascade rows as they arrive; the
  // end-of-stream clamp matches the flush at end of audio.
  Matrix casc;
  if (cfg.mode == 2) casc = encode_cascaded(params, causal);

  SegmenterStrategy seg = cfg.segmenter;
  seg.frame_ms = frames.frame_ms;
  seg.reset();

  std::vector<Hypothesis> beam1 = {Hypothesis{}};
  std::vector<Hypothesis> beam2 = {Hypothesis{}};
  const bool run_d1 = cfg.mode != 2;
  const bool run_d2 = cfg.mode != 1;
  const bool eos_from_d2 = cfg.mode == 2;
  const bool eos_kind = seg.kind == SegmenterStrategy::Kind::kEos;

  int elapsed = 0;       // original frames in the open segment
  int kept_seen = 0;     // kept frames consumed so far
  int next_cascade = 0;  // next cascade row decoder 2 will consume

  auto words_of = [&params](const std::vector<int>& ids) {
    std::vector<std::string> words;
    words.reserve(ids.size());
    for (int id : ids) words.push_back(params.vocab[id]);
    return words;
  };

  // Mode 3: run decoder 2 forward through cascade rows ending at kept
  // index `clamp`, padding right context with that row.
  auto catch_up_d2 = [&](int clamp) {
    for (; next_cascade <= clamp; ++next_cascade) {
      Vector row = cascade_row(params, causal, next_cascade, clamp);
      beam2 = step_beam(beam2, params, row.data(), JointHead::kWp2,
                        cfg.beam_size_pass2, cfg.pruning_threshold,
                        cfg.max_expansion_depth);
    }
  };

  auto finalize = [&](BoundaryCause cause, int boundary, int emission) {
    const Hypothesis& top = run_d2 ? beam2.front() : beam1.front();
    Segment s;
    s.tokens = words_of(top.tokens);
    s.boundary_frame = boundary;
    s.eos_emission_frame = emission;
    s.cause = cause;
    out.segments.push_back(std::move(s));
    out.events.push_back({boundary, emission, cause});
    beam1 = {Hypothesis{{}, 0.0, beam1.front().pred_context}};
    beam2 = {Hypothesis{{}, 0.0, beam2.front().pred_context}};
    seg.reset();
    elapsed = 0;
  };

  for (int o = 0; o < T; ++o) {
    ++elapsed;
    double eos_cost = 0.0;
    bool have_eos = false;
    if (vad.kept[o]) {
      int k = kept_seen++;
      if (run_d1) {
        beam1 = step_beam(beam1, params, causal.row(k), JointHead::kWp1,
                          cfg.beam_size_pass1, cfg.pruning_threshold,
                          cfg.max_expansion_depth);
        if (eos_kind && !eos_from_d2) {
          eos_cost = eos_neg_log_posterior(params, causal.row(k),
                                           beam1.front(), JointHead::kEos1);
          have_eos = true;
        }
      }
      if (cfg.mode == 2 && k >= R) {
        int j = k - R;
        beam2 = step_beam(beam2, params, casc.row(j), JointHead::kWp2,
                          cfg.beam_size_pass2, cfg.pruning_threshold,
                          cfg.max_expansion_depth);
        next_cascade = j + 1;
        if (eos_kind) {
          eos_cost = eos_neg_log_posterior(params, casc.row(j), beam2.front(),
                                           JointHead::kEos2);
          have_eos = true;
        }
      }
      if (cfg.mode == 3 && k >= R) {
        // Real right context is fully available for row k - R.
        Vector row = cascade_row(params, causal, k - R, J - 1);
        beam2 = step_beam(beam2, params, row.data(), JointHead::kWp2,
                          cfg.beam_size_pass2, cfg.pruning_threshold,
                          cfg.max_expansion_depth);
        next_cascade = k - R + 1;
      }
    }

    const Hypothesis& driver_top =
        eos_from_d2 ? beam2.front() : beam1.front();
    bool has_tokens = !driver_top.tokens.empty();
    bool fired = false;
    BoundaryCause cause = BoundaryCause::kEos;
    if (eos_kind) {
      // The EOS head is consulted only when a finalizable segment
      // exists (tokens present) and the current frame is silence. An
      // empty segment would refire endlessly inside the pause that
      // follows a cut, and a voiced frame can fire mid-word, while the
      // last word's audio is still running.
      if (have_eos && has_tokens && vad.silence[o] != 0) {
        fired = should_segment(&seg, vad.silence[o] != 0, has_tokens,
                               &eos_cost);
      }
      cause = BoundaryCause::kEos;
    } else {
      fired = should_segment(&seg, vad.silence[o] != 0, has_tokens, nullptr);
      cause = seg.kind == SegmenterStrategy::Kind::kVad ? BoundaryCause::kVad
                                                        : BoundaryCause::kFixed;
    }
    if (!fired &&
        force_finalize_check(elapsed, frames.frame_ms, cfg.max_segment_s)) {
      fired = true;
      cause = BoundaryCause::kForced;
    }
    if (fired) {
      if (cfg.mode == 3 && kept_seen > 0) catch_up_d2(kept_seen - 1);
      finalize(cause, o + 1, o + 1);
    }
  }

  if (elapsed > 0) {
    if (cfg.mode == 2) {
      for (; next_cascade < J; ++next_cascade) {
        beam2 = step_beam(beam2, params, casc.row(next_cascade),
                          JointHead::kWp2, cfg.beam_size_pass2,
                          cfg.pruning_threshold, cfg.max_expansion_depth);
      }
    }
    if (cfg.mode == 3 && kept_seen > 0) catch_up_d2(J - 1);
    finalize(BoundaryCause::kEndOfAudio, T, T);
  }
  return out;
}

}  // namespace segstream
