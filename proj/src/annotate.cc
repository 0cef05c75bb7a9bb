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

#include "segstream/annotate.hh"

#include <algorithm>
#include <cctype>

#include "segstream/common.hh"

namespace segstream {

namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_punct_char(char c) { return kPunctChars.find(c) != std::string::npos; }

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::vector<size_t> disambiguate_terminal(
    const std::string& paragraph,
    const std::vector<std::string>& abbreviations) {
  std::vector<size_t> terminals;
  for (size_t i = 0; i < paragraph.size(); ++i) {
    char c = paragraph[i];
    if (c == '?' || c == '!') {
      terminals.push_back(i);
      continue;
    }
    if (c != '.') continue;

    // Rule a: the period belongs to a listed abbreviation token. The
    // candidate is everything after the last whitespace up to and
    // including this period.
    size_t start = i;
    while (start > 0 && !is_space(paragraph[start - 1])) --start;
    std::string candidate = lower(paragraph.substr(start, i - start + 1));
    bool abbrev = std::find(abbreviations.begin(), abbreviations.end(),
                            candidate) != abbreviations.end();
    if (abbrev) continue;

    // Rule b: the next non-space character is a lowercase letter.
    size_t j = i + 1;
    while (j < paragraph.size() && is_space(paragraph[j])) ++j;
    if (j < paragraph.size() &&
        std::islower(static_cast<unsigned char>(paragraph[j]))) {
      continue;
    }
    terminals.push_back(i);
  }
  return terminals;
}

AnnotatedTranscript normalize_to_spoken(const std::string& paragraph,
                                        const std::vector<size_t>& terminals) {
  // Raw whitespace-delimited tokens with their byte ranges.
  struct RawToken {
    size_t begin, end;  // [begin, end)
    int surface = -1;   // index into out.tokens, or -1 if dropped
  };
  std::vector<RawToken> raw;
  size_t i = 0;
  while (i < paragraph.size()) {
    while (i < paragraph.size() && is_space(paragraph[i])) ++i;
    if (i >= paragraph.size()) break;
    size_t b = i;
    while (i < paragraph.size() && !is_space(paragraph[i])) ++i;
    raw.push_back({b, i, -1});
  }

  AnnotatedTranscript out;
  for (auto& rt : raw) {
    std::string surface;
    for (size_t k = rt.begin; k < rt.end; ++k) {
      char c = paragraph[k];
      if (!is_punct_char(c)) {
        surface.push_back(
            static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      }
    }
    if (!surface.empty()) {
      rt.surface = static_cast<int>(out.tokens.size());
      out.tokens.push_back(std::move(surface));
    }
  }

  // Attach each terminal mark to the nearest preceding surviving token.
  for (size_t off : terminals) {
    int attach = -1;
    for (const auto& rt : raw) {
      if (off >= rt.end) {
        if (rt.surface >= 0) attach = rt.surface;
        continue;
      }
      if (off >= rt.begin) {
        if (rt.surface >= 0) attach = rt.surface;
      }
      break;
    }
    if (attach >= 0) out.eos_after.insert(attach);
  }
  return out;
}

std::vector<Window> make_windows(const AnnotatedTranscript& transcript,
                                 int window, int overlap) {
  if (window <= 0) throw ValidationError("make_windows: window must be > 0");
  if (overlap < 0 || overlap >= window) {
    throw ValidationError("make_windows: overlap must be in [0, window)");
  }
  const int n = static_cast<int>(transcript.tokens.size());
  std::vector<int> starts;
  if (n <= window) {
    starts.push_back(0);
  } else {
    int stride = window - overlap;
    for (int s = 0; s + window < n; s += stride) starts.push_back(s);
    starts.push_back(n - window);  // final window right-aligned
  }

  std::vector<Window> out;
  for (int s : starts) {
    Window w;
    w.start = s;
    int len = std::min(window, n - s);
    w.tokens.assign(transcript.tokens.begin() + s,
                    transcript.tokens.begin() + s + len);
    w.labels.resize(len, 0);
    for (int k = 0; k < len; ++k) {
      if (transcript.eos_after.count(s + k)) w.labels[k] = 1;
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<uint8_t> merge_window_predictions(
    const std::vector<Window>& windows, int n_tokens) {
  std::vector<uint8_t> labels(n_tokens, 0);
  std::vector<int> best_dist(n_tokens, -1);
  for (const auto& w : windows) {
    if (w.labels.size() != w.tokens.size()) {
      throw ValidationError(
          "merge_window_predictions: window labels/tokens length mismatch");
    }
    int len = static_cast<int>(w.tokens.size());
    for (int k = 0; k < len; ++k) {
      int pos = w.start + k;
      if (pos < 0 || pos >= n_tokens) {
        throw ValidationError(
            "merge_window_predictions: window position out of range");
      }
      int dist = std::min(k, len - 1 - k);
      // Strictly greater keeps the earlier window on ties.
      if (dist > best_dist[pos]) {
        best_dist[pos] = dist;
        labels[pos] = w.labels[k];
      }
    }
  }
  for (int pos = 0; pos < n_tokens; ++pos) {
    if (best_dist[pos] < 0) {
      throw InternalError("merge_window_predictions: uncovered token position");
    }
  }
  return labels;
}

std::vector<std::string> inject_eos(const std::vector<std::string>& tokens,
                                    const std::vector<uint8_t>& labels) {
  if (tokens.size() != labels.size()) {
    throw ValidationError("inject_eos: tokens/labels length mismatch");
  }
  std::vector<std::string> out;
  out.reserve(tokens.size() * 2);
  for (size_t i = 0; i < tokens.size(); ++i) {
    out.push_back(tokens[i]);
    if (labels[i]) out.emplace_back(kEosToken);
  }
  return out;
}

}  // namespace segstream
