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
// Evaluation: word error rate with an error breakdown, nearest-rank
// percentiles, segment-length and EOS-latency extraction from decode
// outputs, and exact-position segmentation F1.

#ifndef SEGSTREAM_METRICS_HH_
#define SEGSTREAM_METRICS_HH_

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "segstream/corpus.hh"
#include "segstream/decoder.hh"

namespace segstream {

struct WerResult {
  double wer = 0.0;
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int n_ref = 0;
  bool empty_reference = false;
};

// Minimum-edit-distance word error rate. <EOS> markers are stripped
// from both sides first. Ties prefer a substitution over an
// insertion-deletion pair. An empty reference reports insertions over
// max(1, N_ref) and sets the flag.
WerResult wer(const std::vector<std::string>& reference,
              const std::vector<std::string>& hypothesis);

// Nearest-rank percentile: sort ascending, take element at index
// ceil(p/100 * n) - 1. Empty input yields nullopt.
std::optional<double> percentile(const std::vector<double>& values, double p);

// Per-segment durations in seconds, in original (pre-filter) time.
std::vector<double> segment_lengths(const SegmentationOutput& output);

struct EosLatency {
  double ms = 0.0;      // clamped at 0
  double raw_ms = 0.0;  // may be negative
};

// Latency of each segmenter-driven boundary (cause eos or vad): the
// emission time minus the end of the last aligned word at or before
// it. Boundaries with no preceding word end are skipped.
std::vector<EosLatency> eos_latencies(const SegmentationOutput& output,
                                      const Alignment& alignment);

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Exact-position boundary F1. Both sets empty scores 1; an empty
// prediction against a non-empty reference (or vice versa) scores 0.
F1Result seg_f1(const std::set<int>& predicted, const std::set<int>& reference);

// Token positions of segmenter-driven boundaries (cause eos or vad):
// the index of the last aligned token ending at or before the
// boundary. Boundaries before any token end are skipped.
std::set<int> boundary_token_positions(const SegmentationOutput& output,
                                       const Alignment& alignment);

struct MetricsReport {
  double wer = 0.0;
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  std::optional<double> sl50, sl90;    // seconds
  std::optional<double> eos50, eos90;  // milliseconds
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int n_segments = 0;
};

}  // namespace segstream

#endif  // SEGSTREAM_METRICS_HH_
