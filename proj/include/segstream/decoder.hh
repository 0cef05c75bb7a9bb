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
// Frame-synchronous streaming beam search over long audio with a
// segmentation state machine. Silence frames beyond an initial keep
// budget are filtered out before decoding but still advance the clock.
// Three operating modes: (1) the causal first decoder supplies both
// wordpieces and EOS decisions; (2) the cascaded second decoder does,
// with its right-context arrival delay; (3) the first decoder makes
// EOS decisions while the second decoder catches up through dummy
// right-context frames and supplies the transcript at the same
// timestamp. Boundaries reset the beams but never the causal encoder
// state; the finalized top hypothesis's last two tokens seed the next
// segment's prediction context.

#ifndef SEGSTREAM_DECODER_HH_
#define SEGSTREAM_DECODER_HH_

#include <array>
#include <string>
#include <vector>

#include "segstream/corpus.hh"
#include "segstream/segmenter.hh"
#include "segstream/transducer.hh"

namespace segstream {

struct Hypothesis {
  std::vector<int> tokens;  // wordpiece ids emitted in this segment
  double log_prob = 0.0;
  std::array<int, 2> pred_context = {-1, -1};  // last 2 tokens overall
};

struct DecodeConfig {
  int beam_size_pass1 = 4;
  int beam_size_pass2 = 8;
  double pruning_threshold = 5.0;
  int max_expansion_depth = 10;
  double eos_threshold = 2.0;  // default for bare "eos" descriptors
  double max_segment_s = 65.0;
  int mode = 1;
  SegmenterStrategy segmenter;
  bool use_vad_filter = true;
  double vad_energy_threshold = 0.5;
  double vad_initial_keep_ms = 200.0;

  void validate() const;
};

enum class BoundaryCause { kEos, kVad, kFixed, kForced, kEndOfAudio };

std::string cause_name(BoundaryCause cause);

// One finalized segment. Frames are counts of original (pre-filter)
// frames from the start of the audio; boundary_frame is the exclusive
// end of the segment, eos_emission_frame the count at which the
// transcript became final for the user.
struct Segment {
  std::vector<std::string> tokens;
  int boundary_frame = 0;
  int eos_emission_frame = 0;
  BoundaryCause cause = BoundaryCause::kEndOfAudio;
};

// Event log entry per boundary, for latency audits.
struct BoundaryEvent {
  int decision_frame = 0;  // original-frame count at the decision
  int emission_frame = 0;  // original-frame count at finalization
  BoundaryCause cause = BoundaryCause::kEndOfAudio;
};

struct SegmentationOutput {
  std::vector<Segment> segments;
  std::vector<BoundaryEvent> events;
  int total_frames = 0;
  double frame_ms = 10.0;
};

// Energy-threshold silence filter. A frame is silence iff its energy
// (sum of squared features) is below energy_threshold; in each
// contiguous silence run the first ceil(initial_keep_ms / frame_ms)
// frames are kept and the rest dropped.
struct VadResult {
  Matrix filtered;               // kept frames, original order
  std::vector<int> orig_index;   // kept row -> original frame index
  std::vector<uint8_t> silence;  // per original frame
  std::vector<uint8_t> kept;     // per original frame
};
VadResult vad_filter(const FrameSequence& frames, double energy_threshold,
                     double initial_keep_ms = 200.0);

// One frame-synchronous step: breadth-first label expansions (up to
// max_expansion_depth per hypothesis) followed by the mandatory blank.
// Duplicate token sequences merge keeping the best score (max
// semiring), then the beam keeps the top beam_size and drops anything
// trailing the best by more than pruning_threshold. Ties order by
// token sequence.
std::vector<Hypothesis> step_beam(const std::vector<Hypothesis>& beam,
                                  const RnntParams& params, const double* h,
                                  JointHead head, int beam_size,
                                  double pruning_threshold,
                                  int max_expansion_depth);

// Negative log posterior of the EOS class at encoder frame h under the
// given EOS head, conditioned on the top hypothesis's context only.
double eos_neg_log_posterior(const RnntParams& params, const double* h,
                             const Hypothesis& top, JointHead eos_head);

// Appends `right_context` copies of the last row, so the cascaded
// encoder can finalize outputs through that frame immediately.
Matrix inject_dummy_frames(const Matrix& causal_prefix, int right_context);

// True once the segment's elapsed original frames reach the cap.
bool force_finalize_check(int elapsed_frames, double frame_ms,
                          double max_segment_s);

SegmentationOutput decode_stream(const RnntParams& params,
                                 const FrameSequence& frames,
                                 const DecodeConfig& cfg);

}  // namespace segstream

#endif  // SEGSTREAM_DECODER_HH_
