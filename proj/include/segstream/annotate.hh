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
// Turns written text with punctuation into spoken-style transcripts with
// sentence-end markers: terminal-mark disambiguation, normalization,
// sliding-window chunking for the boundary tagger, and merging of
// per-window predictions back into one label sequence.

#ifndef SEGSTREAM_ANNOTATE_HH_
#define SEGSTREAM_ANNOTATE_HH_

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace segstream {

// Characters stripped from token surfaces during normalization.
inline constexpr std::string_view kPunctChars = ".,?!;:";

// The marker token interleaved into transcripts at sentence ends.
inline constexpr std::string_view kEosToken = "<EOS>";

// Lowercase tokens without punctuation plus the set of token indices
// after which a sentence ends.
struct AnnotatedTranscript {
  std::vector<std::string> tokens;
  std::set<int> eos_after;
};

// One chunk of a transcript. `start` is the index of tokens[0] in the
// source transcript; labels[i] == 1 marks <EOS> after tokens[i].
struct Window {
  int start = 0;
  std::vector<std::string> tokens;
  std::vector<uint8_t> labels;
};

// Returns byte offsets of sentence-terminal marks in `paragraph`.
// '?' and '!' are always terminal. '.' is non-terminal when it is part
// of a token in `abbreviations` (entries include the period, e.g.
// "inc.") or when the next non-space character is a lowercase letter.
std::vector<size_t> disambiguate_terminal(
    const std::string& paragraph,
    const std::vector<std::string>& abbreviations);

// Lowercases, strips punctuation characters from token surfaces, drops
// tokens that become empty, and converts terminal offsets to eos_after
// indices on the nearest preceding surviving token.
AnnotatedTranscript normalize_to_spoken(const std::string& paragraph,
                                        const std::vector<size_t>& terminals);

// Cuts the transcript into windows of `window` tokens with the given
// overlap. Consecutive starts differ by window - overlap except the
// final window, which is right-aligned; a transcript no longer than
// `window` yields one window. Labels are sliced from eos_after.
std::vector<Window> make_windows(const AnnotatedTranscript& transcript,
                                 int window, int overlap);

// Resolves overlapping window predictions: each token takes the label
// from the window where it sits farthest from a window edge; ties go to
// the earlier window. Every position must be covered by some window.
std::vector<uint8_t> merge_window_predictions(
    const std::vector<Window>& windows, int n_tokens);

// Interleaves the <EOS> marker after each labeled token.
std::vector<std::string> inject_eos(const std::vector<std::string>& tokens,
                                    const std::vector<uint8_t>& labels);

}  // namespace segstream

#endif  // SEGSTREAM_ANNOTATE_HH_
