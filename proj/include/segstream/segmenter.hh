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
// Pluggable boundary-decision strategies. A strategy is ticked once
// per frame by the decode loop and answers whether to cut a segment
// after that frame. The learned EOS strategy consumes a per-frame
// negative log posterior computed by the decoder.

#ifndef SEGSTREAM_SEGMENTER_HH_
#define SEGSTREAM_SEGMENTER_HH_

#include <string>

#include "segstream/common.hh"

namespace segstream {

struct SegmenterStrategy {
  enum class Kind { kNone, kFixed, kVad, kEos };

  Kind kind = Kind::kNone;
  double length_s = 3.0;         // fixed
  double min_silence_ms = 400.0; // vad
  double eos_threshold = 2.0;    // eos: fire when cost < threshold
  double frame_ms = 10.0;        // set by the decode session

  // Counters, reset at every boundary.
  int frames_since_boundary = 0;
  int silence_run_frames = 0;

  void reset();
  std::string describe() const;  // round-trips through parse_segmenter
};

// Descriptor grammar: "none" | "fixed:SECONDS" | "vad" | "vad:MS" |
// "eos" | "eos:THRESHOLD". Bare vad/eos take the supplied defaults.
SegmenterStrategy parse_segmenter(const std::string& descriptor,
                                  double default_vad_ms,
                                  double default_eos_threshold);

// Ticks the strategy with one frame's signals and decides whether to
// cut after it. eos_neg_log_posterior must be non-null exactly for the
// eos kind. Counters self-reset when the answer is true; boundaries
// triggered elsewhere (forced, end of audio) need an explicit reset().
bool should_segment(SegmenterStrategy* s, bool silence_flag,
                    bool segment_has_tokens,
                    const double* eos_neg_log_posterior);

}  // namespace segstream

#endif  // SEGSTREAM_SEGMENTER_HH_
