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

#include "segstream/metrics.hh"

#include <algorithm>
#include <cmath>

#include "segstream/annotate.hh"

namespace segstream {

namespace {

std::vector<std::string> strip_eos(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    if (tok != kEosToken) out.push_back(tok);
  }
  return out;
}

bool is_segmenter_cause(BoundaryCause cause) {
  return cause == BoundaryCause::kEos || cause == BoundaryCause::kVad;
}

}  // namespace

WerResult wer(const std::vector<std::string>& reference,
              const std::vector<std::string>& hypothesis) {
  std::vector<std::string> ref = strip_eos(reference);
  std::vector<std::string> hyp = strip_eos(hypothesis);
  const int R = static_cast<int>(ref.size());
  const int H = static_cast<int>(hyp.size());

  Matrix d(R + 1, H + 1);
  for (int i = 0; i <= R; ++i) d.at(i, 0) = i;
  for (int j = 0; j <= H; ++j) d.at(0, j) = j;
  for (int i = 1; i <= R; ++i) {
    for (int j = 1; j <= H; ++j) {
      double sub = d.at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      double del = d.at(i - 1, j) + 1;
      double ins = d.at(i, j - 1) + 1;
      d.at(i, j) = std::min({sub, del, ins});
    }
  }

  // Backtrace with tie preference: diagonal, then deletion, then
  // insertion.
  WerResult res;
  res.n_ref = R;
  int i = R, j = H;
  while (i > 0 || j > 0) {
    double cur = d.at(i, j);
    if (i > 0 && j > 0 &&
        cur == d.at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      res.substitutions += ref[i - 1] != hyp[j - 1];
      --i;
      --j;
    } else if (i > 0 && cur == d.at(i - 1, j) + 1) {
      ++res.deletions;
      --i;
    } else {
      ++res.insertions;
      --j;
    }
  }
  res.empty_reference = R == 0 && H > 0;
  res.wer = static_cast<double>(res.substitutions + res.deletions +
                                res.insertions) /
            std::max(1, R);
  return res;
}

std::optional<double> percentile(const std::vector<double>& values, double p) {
  if (p <= 0.0 || p > 100.0) {
    throw ValidationError("percentile: p must be in (0, 100]");
  }
  if (values.empty()) return std::nullopt;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  int n = static_cast<int>(sorted.size());
  // Nearest-rank index: ceil(p/100 * n) - 1.  The product is computed in
  // floating point, so shave a hair before ceil so that exact integer ranks
  // (e.g. p=7, n=100) do not get bumped up by representation error.
  int idx = static_cast<int>(std::ceil(p / 100.0 * n - 1e-9)) - 1;
  idx = std::clamp(idx, 0, n - 1);
  return sorted[idx];
}

std::vector<double> segment_lengths(const SegmentationOutput& output) {
  std::vector<double> lengths;
  lengths.reserve(output.segments.size());
  int prev = 0;
  for (const auto& seg : output.segments) {
    lengths.push_back((seg.boundary_frame - prev) * output.frame_ms / 1000.0);
    prev = seg.boundary_frame;
  }
  return lengths;
}

std::vector<EosLatency> eos_latencies(const SegmentationOutput& output,
                                      const Alignment& alignment) {
  std::vector<EosLatency> latencies;
  for (const auto& seg : output.segments) {
    if (!is_segmenter_cause(seg.cause)) continue;
    double emission_ms = seg.eos_emission_frame * output.frame_ms;
    // Last aligned word ending at or before the emission.
    double last_end_ms = -1.0;
    for (const auto& entry : alignment.entries) {
      double end_ms = entry.end_frame * output.frame_ms;
      if (end_ms <= emission_ms && end_ms > last_end_ms) last_end_ms = end_ms;
    }
    if (last_end_ms < 0.0) continue;
    EosLatency lat;
    lat.raw_ms = emission_ms - last_end_ms;
    lat.ms = std::max(0.0, lat.raw_ms);
    latencies.push_back(lat);
  }
  return latencies;
}

F1Result seg_f1(const std::set<int>& predicted,
                const std::set<int>& reference) {
  F1Result res;
  if (predicted.empty() && reference.empty()) {
    res.precision = res.recall = res.f1 = 1.0;
    return res;
  }
  std::vector<int> inter;
  std::set_intersection(predicted.begin(), predicted.end(), reference.begin(),
                        reference.end(), std::back_inserter(inter));
  if (inter.empty()) return res;
  res.precision = static_cast<double>(inter.size()) / predicted.size();
  res.recall = static_cast<double>(inter.size()) / reference.size();
  res.f1 = 2.0 * res.precision * res.recall / (res.precision + res.recall);
  return res;
}

std::set<int> boundary_token_positions(const SegmentationOutput& output,
                                       const Alignment& alignment) {
  std::set<int> positions;
  for (const auto& seg : output.segments) {
    if (!is_segmenter_cause(seg.cause)) continue;
    int best_end = -1;
    int best_token = -1;
    for (const auto& entry : alignment.entries) {
      if (entry.end_frame <= seg.boundary_frame && entry.end_frame > best_end) {
        best_end = entry.end_frame;
        best_token = entry.token_index;
      }
    }
    if (best_token >= 0) positions.insert(best_token);
  }
  return positions;
}

}  // namespace segstream
