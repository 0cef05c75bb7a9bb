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

#include "segstream/segmenter.hh"

#include <cmath>
#include <cstdio>

namespace segstream {

namespace {

double parse_number(const std::string& text, const std::string& what) {
  size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw ValidationError("segmenter: bad " + what + " '" + text + "'");
  }
  if (pos != text.size()) {
    throw ValidationError("segmenter: bad " + what + " '" + text + "'");
  }
  return value;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void SegmenterStrategy::reset() {
  frames_since_boundary = 0;
  silence_run_frames = 0;
}

std::string SegmenterStrategy::describe() const {
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kFixed: return "fixed:" + format_number(length_s);
    case Kind::kVad: return "vad:" + format_number(min_silence_ms);
    case Kind::kEos: return "eos:" + format_number(eos_threshold);
  }
  throw InternalError("describe: bad segmenter kind");
}

SegmenterStrategy parse_segmenter(const std::string& descriptor,
                                  double default_vad_ms,
                                  double default_eos_threshold) {
  SegmenterStrategy s;
  std::string head = descriptor;
  std::string arg;
  size_t colon = descriptor.find(':');
  if (colon != std::string::npos) {
    head = descriptor.substr(0, colon);
    arg = descriptor.substr(colon + 1);
  }
  if (head == "none") {
    if (!arg.empty()) {
      throw ValidationError("segmenter: 'none' takes no argument");
    }
    s.kind = SegmenterStrategy::Kind::kNone;
  } else if (head == "fixed") {
    if (arg.empty()) {
      throw ValidationError("segmenter: 'fixed' needs a length, e.g. fixed:3");
    }
    s.kind = SegmenterStrategy::Kind::kFixed;
    s.length_s = parse_number(arg, "fixed length");
    if (s.length_s <= 0.0) {
      throw ValidationError("segmenter: fixed length must be > 0");
    }
  } else if (head == "vad") {
    s.kind = SegmenterStrategy::Kind::kVad;
    s.min_silence_ms = arg.empty() ? default_vad_ms
                                   : parse_number(arg, "vad silence");
    if (s.min_silence_ms <= 0.0) {
      throw ValidationError("segmenter: vad min silence must be > 0");
    }
  } else if (head == "eos") {
    s.kind = SegmenterStrategy::Kind::kEos;
    s.eos_threshold = arg.empty() ? default_eos_threshold
                                  : parse_number(arg, "eos threshold");
    if (s.eos_threshold < 0.0) {
      throw ValidationError("segmenter: eos threshold must be >= 0");
    }
  } else {
    throw ValidationError("segmenter: unknown kind '" + descriptor + "'");
  }
  return s;
}

bool should_segment(SegmenterStrategy* s, bool silence_flag,
                    bool segment_has_tokens,
                    const double* eos_neg_log_posterior) {
  bool is_eos = s->kind == SegmenterStrategy::Kind::kEos;
  if (is_eos && eos_neg_log_posterior == nullptr) {
    throw ValidationError("should_segment: eos kind needs a posterior value");
  }
  if (!is_eos && eos_neg_log_posterior != nullptr) {
    throw ValidationError("should_segment: posterior given to non-eos kind");
  }
  ++s->frames_since_boundary;
  s->silence_run_frames = silence_flag ? s->silence_run_frames + 1 : 0;

  bool fire = false;
  switch (s->kind) {
    case SegmenterStrategy::Kind::kNone:
      break;
    case SegmenterStrategy::Kind::kFixed: {
      int interval = static_cast<int>(
          std::floor(s->length_s * 1000.0 / s->frame_ms));
      if (interval < 1) interval = 1;
      fire = s->frames_since_boundary >= interval;
      break;
    }
    case SegmenterStrategy::Kind::kVad:
      fire = segment_has_tokens &&
             s->silence_run_frames * s->frame_ms >= s->min_silence_ms;
      break;
    case SegmenterStrategy::Kind::kEos:
      fire = *eos_neg_log_posterior < s->eos_threshold;
      break;
  }
  if (fire) s->reset();
  return fire;
}

}  // namespace segstream
