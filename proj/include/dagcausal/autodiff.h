/*
 * Copyright 2026 The dagcausal Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DAGCAUSAL_AUTODIFF_H_
#define DAGCAUSAL_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dagcausal/rng.h"
#include "dagcausal/tensor.h"

namespace dagcausal::nn {

// A value in the computation graph. Parameters are long-lived leaves whose
// grad accumulates across backward passes until zeroed; intermediates are
// created fresh by every forward pass.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::string name;

  // Allocates a zero gradient of the value's shape on first use.
  Tensor& ensure_grad();
  bool has_grad() const { return !grad.empty(); }
  void zero_grad() { grad = Tensor(); }
};

using Var = std::shared_ptr<Node>;

Var parameter(Tensor value, std::string name = {});
Var constant(Tensor value);

// Ordered record of the differentiable operations of one forward pass.
class Tape {
 public:
  using BackwardFn = std::function<void(const Node& out)>;

  // Returns a node holding `value`. When `differentiable` is false the
  // result is a constant and nothing is recorded.
  Var record(Tensor value, bool differentiable, BackwardFn fn);

  // Seeds d(loss)/d(loss) = 1 and replays the record in reverse. The loss
  // must be a single-element tensor. A tape can be replayed once; call
  // reset() before reusing it.
  void backward(const Var& loss);
  void reset();

  std::size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Entry {
    Var out;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
  bool consumed_ = false;
};

// Elementwise; operands must have identical shapes.
Var add(Tape& t, const Var& a, const Var& b);
Var sub(Tape& t, const Var& a, const Var& b);
Var mul(Tape& t, const Var& a, const Var& b);
Var scale(Tape& t, const Var& a, double c);
Var add_scalar(Tape& t, const Var& a, double c);
Var relu(Tape& t, const Var& a);
Var sigmoid(Tape& t, const Var& a);
Var log(Tape& t, const Var& a);
Var square(Tape& t, const Var& a);
Var clamp(Tape& t, const Var& a, double lo, double hi);

// x[M x n] + b[n] broadcast over rows.
Var add_row(Tape& t, const Var& x, const Var& b);
// x[(N*D) x E] + table[D x E], table row r % D added to row r.
Var add_tiled(Tape& t, const Var& x, const Var& table);

// a[m x k] * b[k x n].
Var matmul(Tape& t, const Var& a, const Var& b);
// x[M x in] * w[in x out] + b[out].
Var linear(Tape& t, const Var& x, const Var& w, const Var& b);
Var transpose(Tape& t, const Var& a);
Var reshape(Tape& t, const Var& a, Shape shape);

// Column-wise concatenation of 2-D tensors with equal row counts.
Var concat_cols(Tape& t, std::span<const Var> parts);
// parts[j] is N x E; output row n*D + j is row n of parts[j].
Var interleave_rows(Tape& t, std::span<const Var> parts);
Var gather_rows(Tape& t, const Var& x, std::span<const std::size_t> rows);

Var sum(Tape& t, const Var& a);
Var mean(Tape& t, const Var& a);
// Sum of squares of every element of every tensor, as a scalar.
Var sum_squares(Tape& t, std::span<const Var> parts);
// r^T K r for a constant K[n x n] and r with n elements.
Var quadratic_form(Tape& t, const Var& r, const Tensor& k);

// Softmax over the last dimension. Entries of -inf map to exactly zero; a
// slice that is entirely -inf raises ContractError.
Var softmax_lastdim(Tape& t, const Var& x);

// Layer normalization over the last dimension of x[M x E].
Var layer_norm(Tape& t, const Var& x, const Var& gamma, const Var& beta,
               double eps = 1e-5);

// Inverted dropout. Identity when !train or rate == 0.
Var dropout(Tape& t, const Var& x, double rate, bool train, Rng& rng);

// Multi-head attention over groups of `nodes` consecutive rows. q, k, v are
// [(N*nodes) x E]; `additive_mask` is nodes x nodes with entries 0 or -inf
// added to the scaled scores before the row softmax. When `weights_out` is
// non-null it receives the post-softmax weights as [N x heads x nodes x
// nodes].
Var masked_attention(Tape& t, const Var& q, const Var& k, const Var& v,
                     std::span<const double> additive_mask, std::size_t nodes,
                     std::size_t heads, double score_scale,
                     Tensor* weights_out = nullptr);

// Row softmax in place with -inf handling, shared by the ops above.
void softmax_inplace(std::span<double> row);

}  // namespace dagcausal::nn

#endif  // DAGCAUSAL_AUTODIFF_H_
