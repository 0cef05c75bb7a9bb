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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <string>
#include <vector>

#include "segstream/annotate.hh"
#include "segstream/common.hh"

namespace segstream {
namespace {

const std::vector<std::string> kAbbrev = {"inc.", "ltd."};

AnnotatedTranscript annotate(const std::string& paragraph) {
  return normalize_to_spoken(paragraph,
                             disambiguate_terminal(paragraph, kAbbrev));
}

TEST_CASE("question and exclamation marks are always terminal") {
  std::string p = "Stop! Really? Yes.";
  auto t = annotate(p);
  CHECK(t.tokens == std::vector<std::string>{"stop", "really", "yes"});
  CHECK(t.eos_after == std::set<int>{0, 1, 2});
}

TEST_CASE("abbreviation periods are not terminal") {
  auto t = annotate("xyz inc. is a public company.");
  CHECK(t.tokens ==
        std::vector<std::string>{"xyz", "inc", "is", "a", "public", "company"});
  CHECK(t.eos_after == std::set<int>{5});
}

TEST_CASE("abbreviation match is case insensitive") {
  auto t = annotate("Acme LTD. pays well.");
  CHECK(t.tokens == std::vector<std::string>{"acme", "ltd", "pays", "well"});
  CHECK(t.eos_after == std::set<int>{3});
}

TEST_CASE("abbreviation at sentence end keeps one terminal") {
  // The trailing period binds to the abbreviation; the sentence keeps a
  // single terminal from the question mark that follows.
  auto t = annotate("they sold xyz inc. Profits rose.");
  CHECK(t.tokens ==
        std::vector<std::string>{"they", "sold", "xyz", "inc", "profits",
                                 "rose"});
  // "inc." is an abbreviation and "Profits" is capitalized, so that
  // period is swallowed; only the final period terminates.
  CHECK(t.eos_after == std::set<int>{5});
}

TEST_CASE("period before a lowercase continuation is not terminal") {
  auto t = annotate("the u.s. market grew.");
  CHECK(t.tokens == std::vector<std::string>{"the", "us", "market", "grew"});
  CHECK(t.eos_after == std::set<int>{3});
}

TEST_CASE("period before a capitalized word is terminal") {
  auto t = annotate("it works. Nobody knows why.");
  CHECK(t.tokens ==
        std::vector<std::string>{"it", "works", "nobody", "knows", "why"});
  CHECK(t.eos_after == std::set<int>{1, 4});
}

TEST_CASE("adjacent terminal marks collapse onto one token") {
  auto t = annotate("What?! Again?");
  CHECK(t.tokens == std::vector<std::string>{"what", "again"});
  CHECK(t.eos_after == std::set<int>{0, 1});
}

TEST_CASE("standalone terminal attaches to the preceding token") {
  auto t = annotate("yes ?");
  CHECK(t.tokens == std::vector<std::string>{"yes"});
  CHECK(t.eos_after == std::set<int>{0});
}

TEST_CASE("terminal before any surviving token is dropped") {
  auto t = annotate("? hello");
  CHECK(t.tokens == std::vector<std::string>{"hello"});
  CHECK(t.eos_after.empty());
}

TEST_CASE("normalization lowercases and strips punctuation characters") {
  auto t = annotate("Well, THIS: a mixed-Case thing; done.");
  CHECK(t.tokens == std::vector<std::string>{"well", "this", "a", "mixed-case",
                                             "thing", "done"});
  CHECK(t.eos_after == std::set<int>{5});
}

TEST_CASE("tokens made only of punctuation vanish") {
  auto t = annotate("so , ... then");
  CHECK(t.tokens == std::vector<std::string>{"so", "then"});
}

TEST_CASE("empty and whitespace paragraphs annotate to nothing") {
  CHECK(annotate("").tokens.empty());
  CHECK(annotate("   \n\t ").tokens.empty());
  CHECK(annotate("").eos_after.empty());
}

AnnotatedTranscript dummy_transcript(int n) {
  AnnotatedTranscript t;
  for (int i = 0; i < n; ++i) t.tokens.push_back("w" + std::to_string(i));
  return t;
}

TEST_CASE("window starts follow stride with a right-aligned tail") {
  auto windows = make_windows(dummy_transcript(100), 40, 10);
  REQUIRE(windows.size() == 3);
  CHECK(windows[0].start == 0);
  CHECK(windows[1].start == 30);
  CHECK(windows[2].start == 60);
  for (const auto& w : windows) CHECK(w.tokens.size() == 40);
}

TEST_CASE("short transcripts yield a single window") {
  auto exact = make_windows(dummy_transcript(40), 40, 10);
  REQUIRE(exact.size() == 1);
  CHECK(exact[0].start == 0);
  CHECK(exact[0].tokens.size() == 40);

  auto shorter = make_windows(dummy_transcript(7), 40, 10);
  REQUIRE(shorter.size() == 1);
  CHECK(shorter[0].tokens.size() == 7);

  auto empty = make_windows(dummy_transcript(0), 40, 10);
  REQUIRE(empty.size() == 1);
  CHECK(empty[0].tokens.empty());
}

TEST_CASE("final window right-aligns on awkward lengths") {
  auto windows = make_windows(dummy_transcript(41), 40, 10);
  REQUIRE(windows.size() == 2);
  CHECK(windows[0].start == 0);
  CHECK(windows[1].start == 1);
  CHECK(windows[1].tokens.size() == 40);
  CHECK(windows[1].tokens.front() == "w1");
  CHECK(windows[1].tokens.back() == "w40");
}

TEST_CASE("window labels slice the transcript annotations") {
  auto t = dummy_transcript(50);
  t.eos_after = {0, 29, 30, 49};
  auto windows = make_windows(t, 40, 10);
  REQUIRE(windows.size() == 2);  // starts 0 and 10
  CHECK(windows[0].labels[0] == 1);
  CHECK(windows[0].labels[29] == 1);
  CHECK(windows[0].labels[30] == 1);
  CHECK(windows[0].labels[1] == 0);
  CHECK(windows[1].start == 10);
  CHECK(windows[1].labels[19] == 1);  // position 29
  CHECK(windows[1].labels[20] == 1);  // position 30
  CHECK(windows[1].labels[39] == 1);  // position 49
}

TEST_CASE("make_windows validates its arguments") {
  auto t = dummy_transcript(10);
  CHECK_THROWS_AS(make_windows(t, 0, 0), ValidationError);
  CHECK_THROWS_AS(make_windows(t, -3, 0), ValidationError);
  CHECK_THROWS_AS(make_windows(t, 5, 5), ValidationError);
  CHECK_THROWS_AS(make_windows(t, 5, 6), ValidationError);
  CHECK_THROWS_AS(make_windows(t, 5, -1), ValidationError);
}

TEST_CASE("every position is covered by some window") {
  Rng rng(20260407);
  for (int trial = 0; trial < 100; ++trial) {
    int n = rng.uniform_int(1, 200);
    int window = rng.uniform_int(1, 50);
    int overlap = rng.uniform_int(0, window - 1);
    auto windows = make_windows(dummy_transcript(n), window, overlap);
    std::vector<int> covered(n, 0);
    for (const auto& w : windows) {
      for (size_t k = 0; k < w.tokens.size(); ++k) ++covered[w.start + k];
    }
    for (int c : covered) CHECK(c >= 1);
  }
}

TEST_CASE("merging ground-truth windows reconstructs the labels") {
  Rng rng(20260408);
  for (int trial = 0; trial < 100; ++trial) {
    int n = rng.uniform_int(1, 150);
    int window = rng.uniform_int(2, 40);
    int overlap = rng.uniform_int(0, window - 1);
    auto t = dummy_transcript(n);
    for (int i = 0; i < n; ++i) {
      if (rng.bernoulli(0.2)) t.eos_after.insert(i);
    }
    auto windows = make_windows(t, window, overlap);
    auto merged = merge_window_predictions(windows, n);
    for (int i = 0; i < n; ++i) {
      CHECK(static_cast<int>(merged[i]) == (t.eos_after.count(i) ? 1 : 0));
    }
  }
}

TEST_CASE("merge picks the window where a token is farthest from an edge") {
  // Position 2 sits at the edge of window A (distance 0) but in the
  // middle of window B (distance 1): B's label wins.
  Window a{0, {"x", "x", "x"}, {0, 0, 1}};
  Window b{1, {"x", "x", "x"}, {0, 0, 0}};
  auto merged = merge_window_predictions({a, b}, 4);
  CHECK(merged[2] == 0);

  Window b2{1, {"x", "x", "x"}, {0, 1, 0}};
  auto merged2 = merge_window_predictions({a, b2}, 4);
  CHECK(merged2[2] == 1);
}

TEST_CASE("merge ties go to the earlier window") {
  // Position 2: last slot of A (distance 0) and first slot of B
  // (distance 0). The earlier window A must win.
  Window a{0, {"x", "x", "x"}, {0, 0, 1}};
  Window b{2, {"x", "x", "x"}, {0, 0, 0}};
  auto merged = merge_window_predictions({a, b}, 5);
  CHECK(merged[2] == 1);

  Window a0{0, {"x", "x", "x"}, {0, 0, 0}};
  Window b1{2, {"x", "x", "x"}, {1, 0, 0}};
  auto merged2 = merge_window_predictions({a0, b1}, 5);
  CHECK(merged2[2] == 0);
}

TEST_CASE("merge validates coverage and shapes") {
  Window a{0, {"x", "x"}, {0, 0}};
  CHECK_THROWS_AS(merge_window_predictions({a}, 3), InternalError);

  Window bad_shape{0, {"x", "x"}, {0}};
  CHECK_THROWS_AS(merge_window_predictions({bad_shape}, 2), ValidationError);

  Window out_of_range{1, {"x", "x"}, {0, 0}};
  CHECK_THROWS_AS(merge_window_predictions({out_of_range}, 2),
                  ValidationError);
}

TEST_CASE("inject_eos interleaves markers after labeled tokens") {
  std::vector<std::string> tokens = {"a", "b", "c"};
  std::vector<uint8_t> labels = {0, 1, 1};
  CHECK(inject_eos(tokens, labels) ==
        std::vector<std::string>{"a", "b", "<EOS>", "c", "<EOS>"});
  CHECK(inject_eos({}, {}).empty());
  CHECK_THROWS_AS(inject_eos(tokens, {0, 1}), ValidationError);
}

TEST_CASE("annotate then window then merge then inject round-trips") {
  std::string p =
      "The board met today. Acme inc. raised prices! Will volumes hold? "
      "Analysts from xyz ltd. say margins look fine.";
  auto t = annotate(p);
  auto windows = make_windows(t, 6, 2);
  auto labels = merge_window_predictions(windows, static_cast<int>(t.tokens.size()));
  auto with_markers = inject_eos(t.tokens, labels);

  std::vector<std::string> expect;
  for (size_t i = 0; i < t.tokens.size(); ++i) {
    expect.push_back(t.tokens[i]);
    if (t.eos_after.count(static_cast<int>(i))) expect.push_back("<EOS>");
  }
  CHECK(with_markers == expect);
  // Four sentences, with both abbreviation periods swallowed.
  CHECK(t.eos_after.size() == 4);
}

}  // namespace
}  // namespace segstream
