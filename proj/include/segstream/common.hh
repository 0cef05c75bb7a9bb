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

#ifndef SEGSTREAM_COMMON_HH_
#define SEGSTREAM_COMMON_HH_

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace segstream {

// Precondition or config-schema violation; the message names the field.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Broken internal invariant (a bug, not bad input).
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. All model math in this project is
// written against this one type; there is no BLAS behind it.
struct Matrix {
  int rows = 0;
  int cols = 0;
  Vector a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
  double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const {
    return a.data() + static_cast<size_t>(r) * cols;
  }
  size_t size() const { return a.size(); }
};

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double logsumexp(double x, double y) {
  if (x == kNegInf) return y;
  if (y == kNegInf) return x;
  double m = x > y ? x : y;
  return m + std::log(std::exp(x - m) + std::exp(y - m));
}

double logsumexp(const double* x, int n);

// log-softmax of logits[0..n) written to out[0..n).
void log_softmax(const double* logits, int n, double* out);

uint64_t splitmix64(uint64_t x);

// Derives an independent seed for stream index `stream` of a base seed.
uint64_t mix_seed(uint64_t seed, uint64_t stream);

// FNV-1a 64-bit content hash, used for run manifests.
uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

// Deterministic RNG. mt19937_64 output is fixed by the standard; the
// distributions below are hand-rolled because the std:: ones are not.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Uniform integer on [a, b] inclusive.
  int64_t uniform_int(int64_t a, int64_t b) {
    if (a > b) throw InternalError("uniform_int: empty range");
    uint64_t span = static_cast<uint64_t>(b - a) + 1;
    return a + static_cast<int64_t>(next_u64() % span);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller without a cached spare, so draw order stays obvious.
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

 private:
  std::mt19937_64 gen_;
};

// Named view over one parameter tensor, used for generic SGD updates,
// gradient clipping, finite-difference checks, and serialization.
struct TensorView {
  std::string name;
  double* data;
  size_t size;
};

// One SGD step of any of the training loops.
struct TrainLogRow {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

double global_norm(const std::vector<TensorView>& views);

// In-place Fisher-Yates shuffle driven by `rng`. Hand-rolled so the
// permutation is identical on every platform.
void shuffle_indices(std::vector<int>* idx, Rng* rng);

}  // namespace segstream

#endif  // SEGSTREAM_COMMON_HH_
