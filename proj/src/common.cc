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

#include "segstream/common.hh"

#include <algorithm>
#include <cstdio>

namespace segstream {

double logsumexp(const double* x, int n) {
  double m = kNegInf;
  for (int i = 0; i < n; ++i) m = std::max(m, x[i]);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

void log_softmax(const double* logits, int n, double* out) {
  double z = logsumexp(logits, n);
  for (int i = 0; i < n; ++i) out[i] = logits[i] - z;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string(buf);
}

double global_norm(const std::vector<TensorView>& views) {
  double s = 0.0;
  for (const auto& v : views) {
    for (size_t i = 0; i < v.size; ++i) s += v.data[i] * v.data[i];
  }
  return std::sqrt(s);
}

void shuffle_indices(std::vector<int>* idx, Rng* rng) {
  for (int i = static_cast<int>(idx->size()) - 1; i > 0; --i) {
    int j = static_cast<int>(rng->uniform_int(0, i));
    std::swap((*idx)[i], (*idx)[j]);
  }
}

}  // namespace segstream
