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

#include "dagcausal/autodiff.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "dagcausal/errors.h"

namespace dagcausal::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

MapMat as_mat(Tensor& t) {
  return MapMat(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}
CMapMat as_mat(const Tensor& t) {
  return CMapMat(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                 static_cast<Eigen::Index>(t.cols()));
}

bool any_grad(std::initializer_list<const Var*> vars) {
  for (const Var* v : vars) {
    if ((*v)->requires_grad) return true;
  }
  return false;
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a->value.shape() != b->value.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a->value.shape()) + " vs " +
                         shape_string(b->value.shape()));
  }
}

void require_2d(const char* op, const Tensor& t) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_string(t.shape()));
  }
}

// Applies `f(i, g)` to every element gradient of `out` and accumulates the
// result into `in` when it needs a gradient.
template <typename F>
void accumulate_elementwise(const Var& in, const Node& out, F f) {
  if (!in->requires_grad) return;
  Tensor& g = in->ensure_grad();
  const auto og = out.grad.data();
  for (std::size_t i = 0; i < og.size(); ++i) g[i] += f(i, og[i]);
}

template <typename F>
Var unary(Tape& t, const Var& a, F forward,
          std::function<double(double x, double y, double g)> derivative) {
  Tensor y = a->value;
  for (double& v : y.data()) v = forward(v);
  return t.record(std::move(y), a->requires_grad,
                  [a, derivative](const Node& out) {
                    const auto x = a->value.data();
                    const auto yv = out.value.data();
                    accumulate_elementwise(a, out, [&](std::size_t i, double g) {
                      return derivative(x[i], yv[i], g);
                    });
                  });
}

}  // namespace

Tensor& Node::ensure_grad() {
  if (grad.empty()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var parameter(Tensor value, std::string name) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->name = std::move(name);
  return n;
}

Var constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

Var Tape::record(Tensor value, bool differentiable, BackwardFn fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = differentiable;
  if (differentiable) entries_.push_back({n, std::move(fn)});
  return n;
}

void Tape::backward(const Var& loss) {
  if (consumed_) {
    throw ContractError("backward replayed on a consumed tape; call reset()");
  }
  if (loss->value.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_string(loss->value.shape()));
  }
  consumed_ = true;
  if (!loss->requires_grad) return;
  loss->ensure_grad()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->out->has_grad()) it->fn(*it->out);
  }
}

void Tape::reset() {
  entries_.clear();
  consumed_ = false;
}

Var add(Tape& t, const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Tensor y = a->value;
  const auto bv = b->value.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return t.record(std::move(y), any_grad({&a, &b}), [a, b](const Node& out) {
    accumulate_elementwise(a, out, [](std::size_t, double g) { return g; });
    accumulate_elementwise(b, out, [](std::size_t, double g) { return g; });
  });
}

Var sub(Tape& t, const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  Tensor y = a->value;
  const auto bv = b->value.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return t.record(std::move(y), any_grad({&a, &b}), [a, b](const Node& out) {
    accumulate_elementwise(a, out, [](std::size_t, double g) { return g; });
    accumulate_elementwise(b, out, [](std::size_t, double g) { return -g; });
  });
}

Var mul(Tape& t, const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Tensor y = a->value;
  const auto bv = b->value.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return t.record(std::move(y), any_grad({&a, &b}), [a, b](const Node& out) {
    const auto av = a->value.data();
    const auto bv = b->value.data();
    accumulate_elementwise(a, out,
                           [&](std::size_t i, double g) { return g * bv[i]; });
    accumulate_elementwise(b, out,
                           [&](std::size_t i, double g) { return g * av[i]; });
  });
}

Var scale(Tape& t, const Var& a, double c) {
  return unary(
      t, a, [c](double x) { return c * x; },
      [c](double, double, double g) { return c * g; });
}

Var add_scalar(Tape& t, const Var& a, double c) {
  return unary(
      t, a, [c](double x) { return x + c; },
      [](double, double, double g) { return g; });
}

Var relu(Tape& t, const Var& a) {
  return unary(
      t, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double, double g) { return x > 0.0 ? g : 0.0; });
}

Var sigmoid(Tape& t, const Var& a) {
  return unary(
      t, a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y, double g) { return g * y * (1.0 - y); });
}

Var log(Tape& t, const Var& a) {
  return unary(
      t, a, [](double x) { return std::log(x); },
      [](double x, double, double g) { return g / x; });
}

Var square(Tape& t, const Var& a) {
  return unary(
      t, a, [](double x) { return x * x; },
      [](double x, double, double g) { return 2.0 * x * g; });
}

Var clamp(Tape& t, const Var& a, double lo, double hi) {
  return unary(
      t, a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double, double g) {
        return (x >= lo && x <= hi) ? g : 0.0;
      });
}

Var add_row(Tape& t, const Var& x, const Var& b) {
  require_2d("add_row", x->value);
  const std::size_t m = x->value.rows(), n = x->value.cols();
  if (b->value.size() != n) {
    throw DimensionError("add_row: bias " + shape_string(b->value.shape()) +
                         " does not match " + shape_string(x->value.shape()));
  }
  Tensor y = x->value;
  const auto bv = b->value.data();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) y.at(r, c) += bv[c];
  return t.record(std::move(y), any_grad({&x, &b}), [x, b, m, n](const Node& out) {
    accumulate_elementwise(x, out, [](std::size_t, double g) { return g; });
    if (b->requires_grad) {
      Tensor& gb = b->ensure_grad();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) gb[c] += out.grad.at(r, c);
    }
  });
}

Var add_tiled(Tape& t, const Var& x, const Var& table) {
  require_2d("add_tiled", x->value);
  require_2d("add_tiled", table->value);
  const std::size_t m = x->value.rows(), e = x->value.cols();
  const std::size_t d = table->value.rows();
  if (table->value.cols() != e || m % d != 0) {
    throw DimensionError("add_tiled: table " +
                         shape_string(table->value.shape()) +
                         " does not tile " + shape_string(x->value.shape()));
  }
  Tensor y = x->value;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < e; ++c) y.at(r, c) += table->value.at(r % d, c);
  return t.record(std::move(y), any_grad({&x, &table}),
                  [x, table, m, e, d](const Node& out) {
                    accumulate_elementwise(
                        x, out, [](std::size_t, double g) { return g; });
                    if (table->requires_grad) {
                      Tensor& gt = table->ensure_grad();
                      for (std::size_t r = 0; r < m; ++r)
                        for (std::size_t c = 0; c < e; ++c)
                          gt.at(r % d, c) += out.grad.at(r, c);
                    }
                  });
}

Var matmul(Tape& t, const Var& a, const Var& b) {
  require_2d("matmul", a->value);
  require_2d("matmul", b->value);
  if (a->value.cols() != b->value.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " +
                         shape_string(a->value.shape()) + " x " +
                         shape_string(b->value.shape()));
  }
  Tensor y({a->value.rows(), b->value.cols()});
  as_mat(y).noalias() = as_mat(a->value) * as_mat(b->value);
  return t.record(std::move(y), any_grad({&a, &b}), [a, b](const Node& out) {
    if (a->requires_grad)
      as_mat(a->ensure_grad()).noalias() +=
          as_mat(out.grad) * as_mat(b->value).transpose();
    if (b->requires_grad)
      as_mat(b->ensure_grad()).noalias() +=
          as_mat(a->value).transpose() * as_mat(out.grad);
  });
}

Var linear(Tape& t, const Var& x, const Var& w, const Var& b) {
  require_2d("linear", x->value);
  require_2d("linear", w->value);
  if (x->value.cols() != w->value.rows() || b->value.size() != w->value.cols()) {
    throw DimensionError("linear: " + shape_string(x->value.shape()) + " x " +
                         shape_string(w->value.shape()) + " + " +
                         shape_string(b->value.shape()));
  }
  const std::size_t m = x->value.rows(), n = w->value.cols();
  Tensor y({m, n});
  auto ym = as_mat(y);
  ym.noalias() = as_mat(x->value) * as_mat(w->value);
  ym.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(
      b->value.data().data(), static_cast<Eigen::Index>(n));
  return t.record(std::move(y), any_grad({&x, &w, &b}),
                  [x, w, b, n](const Node& out) {
                    const auto g = as_mat(out.grad);
                    if (x->requires_grad)
                      as_mat(x->ensure_grad()).noalias() +=
                          g * as_mat(w->value).transpose();
                    if (w->requires_grad)
                      as_mat(w->ensure_grad()).noalias() +=
                          as_mat(x->value).transpose() * g;
                    if (b->requires_grad) {
                      Eigen::Map<Eigen::RowVectorXd>(
                          b->ensure_grad().data().data(),
                          static_cast<Eigen::Index>(n)) += g.colwise().sum();
                    }
                  });
}

Var transpose(Tape& t, const Var& a) {
  require_2d("transpose", a->value);
  Tensor y({a->value.cols(), a->value.rows()});
  as_mat(y) = as_mat(a->value).transpose();
  return t.record(std::move(y), a->requires_grad, [a](const Node& out) {
    as_mat(a->ensure_grad()) += as_mat(out.grad).transpose();
  });
}

Var reshape(Tape& t, const Var& a, Shape shape) {
  Tensor y = a->value.reshaped(std::move(shape));
  return t.record(std::move(y), a->requires_grad, [a](const Node& out) {
    accumulate_elementwise(a, out, [](std::size_t, double g) { return g; });
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t m = parts.front()->value.rows();
  std::size_t total = 0;
  bool diff = false;
  for (const auto& p : parts) {
    require_2d("concat_cols", p->value);
    if (p->value.rows() != m) {
      throw DimensionError("concat_cols: row counts differ, " +
                           shape_string(parts.front()->value.shape()) +
                           " vs " + shape_string(p->value.shape()));
    }
    total += p->value.cols();
    diff = diff || p->requires_grad;
  }
  Tensor y({m, total});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t c = p->value.cols();
    for (std::size_t r = 0; r < m; ++r)
      std::copy_n(&p->value.at(r, 0), c, &y.at(r, offset));
    offset += c;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(y), diff, [inputs, m](const Node& out) {
    std::size_t offset = 0;
    for (const auto& p : inputs) {
      const std::size_t c = p->value.cols();
      if (p->requires_grad) {
        Tensor& g = p->ensure_grad();
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t j = 0; j < c; ++j)
            g.at(r, j) += out.grad.at(r, offset + j);
      }
      offset += c;
    }
  });
}

Var interleave_rows(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("interleave_rows: no inputs");
  const Shape& s0 = parts.front()->value.shape();
  bool diff = false;
  for (const auto& p : parts) {
    if (p->value.shape() != s0) {
      throw DimensionError("interleave_rows: shape mismatch " +
                           shape_string(s0) + " vs " +
                           shape_string(p->value.shape()));
    }
    diff = diff || p->requires_grad;
  }
  require_2d("interleave_rows", parts.front()->value);
  const std::size_t n = s0[0], e = s0[1], d = parts.size();
  Tensor y({n * d, e});
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t r = 0; r < n; ++r)
      std::copy_n(&parts[j]->value.at(r, 0), e, &y.at(r * d + j, 0));
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(y), diff, [inputs, n, e, d](const Node& out) {
    for (std::size_t j = 0; j < d; ++j) {
      if (!inputs[j]->requires_grad) continue;
      Tensor& g = inputs[j]->ensure_grad();
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < e; ++c)
          g.at(r, c) += out.grad.at(r * d + j, c);
    }
  });
}

Var gather_rows(Tape& t, const Var& x, std::span<const std::size_t> rows) {
  require_2d("gather_rows", x->value);
  const std::size_t e = x->value.cols();
  for (auto r : rows) {
    if (r >= x->value.rows()) {
      throw DimensionError("gather_rows: row " + std::to_string(r) +
                           " out of range for " +
                           shape_string(x->value.shape()));
    }
  }
  if (rows.empty()) throw DimensionError("gather_rows: empty index list");
  Tensor y({rows.size(), e});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(&x->value.at(rows[i], 0), e, &y.at(i, 0));
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return t.record(std::move(y), x->requires_grad, [x, idx, e](const Node& out) {
    Tensor& g = x->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < e; ++c) g.at(idx[i], c) += out.grad.at(i, c);
  });
}

Var sum(Tape& t, const Var& a) {
  double s = 0.0;
  for (double v : a->value.data()) s += v;
  return t.record(Tensor::scalar(s), a->requires_grad, [a](const Node& out) {
    const double g0 = out.grad[0];
    Tensor& g = a->ensure_grad();
    for (double& v : g.data()) v += g0;
  });
}

Var mean(Tape& t, const Var& a) {
  const double n = static_cast<double>(a->value.size());
  double s = 0.0;
  for (double v : a->value.data()) s += v;
  return t.record(Tensor::scalar(s / n), a->requires_grad,
                  [a, n](const Node& out) {
                    const double g0 = out.grad[0] / n;
                    Tensor& g = a->ensure_grad();
                    for (double& v : g.data()) v += g0;
                  });
}

Var sum_squares(Tape& t, std::span<const Var> parts) {
  double s = 0.0;
  bool diff = false;
  for (const auto& p : parts) {
    for (double v : p->value.data()) s += v * v;
    diff = diff || p->requires_grad;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(Tensor::scalar(s), diff, [inputs](const Node& out) {
    const double g0 = out.grad[0];
    for (const auto& p : inputs) {
      if (!p->requires_grad) continue;
      Tensor& g = p->ensure_grad();
      const auto v = p->value.data();
      for (std::size_t i = 0; i < v.size(); ++i) g[i] += 2.0 * v[i] * g0;
    }
  });
}

Var quadratic_form(Tape& t, const Var& r, const Tensor& k) {
  const std::size_t n = r->value.size();
  require_2d("quadratic_form", k);
  if (k.rows() != n || k.cols() != n) {
    throw DimensionError("quadratic_form: kernel " + shape_string(k.shape()) +
                         " does not match residual " +
                         shape_string(r->value.shape()));
  }
  const Eigen::Map<const Eigen::VectorXd> rv(r->value.data().data(),
                                             static_cast<Eigen::Index>(n));
  const double q = rv.dot(as_mat(k) * rv);
  return t.record(Tensor::scalar(q), r->requires_grad, [r, k, n](const Node& out) {
    const Eigen::Map<const Eigen::VectorXd> rv(r->value.data().data(),
                                               static_cast<Eigen::Index>(n));
    Eigen::Map<Eigen::VectorXd> g(r->ensure_grad().data().data(),
                                  static_cast<Eigen::Index>(n));
    const auto km = as_mat(k);
    g += out.grad[0] * (km * rv + km.transpose() * rv);
  });
}

void softmax_inplace(std::span<double> row) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : row) {
    // Overflowed scores propagate as NaN so the trainer can report divergence.
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      std::fill(row.begin(), row.end(), std::numeric_limits<double>::quiet_NaN());
      return;
    }
    mx = std::max(mx, v);
  }
  if (!std::isfinite(mx)) {
    throw ContractError(
        "softmax over a slice with no finite entry (node with no permitted "
        "attention target)");
  }
  double z = 0.0;
  for (double& v : row) {
    v = std::isinf(v) && v < 0 ? 0.0 : std::exp(v - mx);
    z += v;
  }
  for (double& v : row) v /= z;
}

Var softmax_lastdim(Tape& t, const Var& x) {
  const std::size_t len = x->value.shape().back();
  Tensor y = x->value;
  for (std::size_t off = 0; off < y.size(); off += len)
    softmax_inplace(y.data().subspan(off, len));
  return t.record(std::move(y), x->requires_grad, [x, len](const Node& out) {
    Tensor& g = x->ensure_grad();
    const auto yv = out.value.data();
    const auto gy = out.grad.data();
    for (std::size_t off = 0; off < yv.size(); off += len) {
      double dot = 0.0;
      for (std::size_t i = 0; i < len; ++i) dot += yv[off + i] * gy[off + i];
      for (std::size_t i = 0; i < len; ++i)
        g[off + i] += yv[off + i] * (gy[off + i] - dot);
    }
  });
}

Var layer_norm(Tape& t, const Var& x, const Var& gamma, const Var& beta,
               double eps) {
  require_2d("layer_norm", x->value);
  const std::size_t m = x->value.rows(), e = x->value.cols();
  if (gamma->value.size() != e || beta->value.size() != e) {
    throw DimensionError("layer_norm: affine parameters do not match " +
                         shape_string(x->value.shape()));
  }
  Tensor y({m, e});
  auto xhat = std::make_shared<std::vector<double>>(m * e);
  auto inv_std = std::make_shared<std::vector<double>>(m);
  for (std::size_t r = 0; r < m; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < e; ++c) mu += x->value.at(r, c);
    mu /= static_cast<double>(e);
    double var = 0.0;
    for (std::size_t c = 0; c < e; ++c) {
      const double d = x->value.at(r, c) - mu;
      var += d * d;
    }
    var /= static_cast<double>(e);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < e; ++c) {
      const double h = (x->value.at(r, c) - mu) * is;
      (*xhat)[r * e + c] = h;
      y.at(r, c) = h * gamma->value[c] + beta->value[c];
    }
  }
  return t.record(
      std::move(y), any_grad({&x, &gamma, &beta}),
      [x, gamma, beta, xhat, inv_std, m, e](const Node& out) {
        const double ef = static_cast<double>(e);
        std::vector<double> dxhat(e);
        for (std::size_t r = 0; r < m; ++r) {
          double s1 = 0.0, s2 = 0.0;
          for (std::size_t c = 0; c < e; ++c) {
            const double g = out.grad.at(r, c);
            const double h = (*xhat)[r * e + c];
            if (gamma->requires_grad) gamma->ensure_grad()[c] += g * h;
            if (beta->requires_grad) beta->ensure_grad()[c] += g;
            dxhat[c] = g * gamma->value[c];
            s1 += dxhat[c];
            s2 += dxhat[c] * h;
          }
          if (x->requires_grad) {
            Tensor& gx = x->ensure_grad();
            const double is = (*inv_std)[r];
            for (std::size_t c = 0; c < e; ++c) {
              gx.at(r, c) += is / ef *
                             (ef * dxhat[c] - s1 - (*xhat)[r * e + c] * s2);
            }
          }
        }
      });
}

Var dropout(Tape& t, const Var& x, double rate, bool train, Rng& rng) {
  if (!train || rate <= 0.0) return x;
  if (rate >= 1.0) throw ContractError("dropout rate must be in [0, 1)");
  const double keep = 1.0 - rate;
  auto mask = std::make_shared<std::vector<double>>(x->value.size());
  Tensor y = x->value;
  for (std::size_t i = 0; i < y.size(); ++i) {
    (*mask)[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
    y[i] *= (*mask)[i];
  }
  return t.record(std::move(y), x->requires_grad, [x, mask](const Node& out) {
    accumulate_elementwise(x, out,
                           [&](std::size_t i, double g) { return g * (*mask)[i]; });
  });
}

Var masked_attention(Tape& t, const Var& q, const Var& k, const Var& v,
                     std::span<const double> additive_mask, std::size_t nodes,
                     std::size_t heads, double score_scale,
                     Tensor* weights_out) {
  require_same_shape("masked_attention", q, k);
  require_same_shape("masked_attention", q, v);
  require_2d("masked_attention", q->value);
  const std::size_t rows = q->value.rows(), e = q->value.cols();
  if (nodes == 0 || rows % nodes != 0) {
    throw DimensionError("masked_attention: " + std::to_string(rows) +
                         " rows are not a multiple of " +
                         std::to_string(nodes) + " nodes");
  }
  if (heads == 0 || e % heads != 0) {
    throw DimensionError("masked_attention: embedding width " +
                         std::to_string(e) + " not divisible by " +
                         std::to_string(heads) + " heads");
  }
  if (additive_mask.size() != nodes * nodes) {
    throw DimensionError("masked_attention: mask must be nodes x nodes");
  }
  const std::size_t n = rows / nodes, dh = e / heads;
  auto probs = std::make_shared<std::vector<double>>(n * heads * nodes * nodes);
  Tensor y({rows, e}, 0.0);
  const auto& Q = q->value;
  const auto& K = k->value;
  const auto& V = v->value;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t base = s * nodes;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t c0 = h * dh;
      double* p = probs->data() + ((s * heads + h) * nodes * nodes);
      for (std::size_t i = 0; i < nodes; ++i) {
        double* pi = p + i * nodes;
        for (std::size_t j = 0; j < nodes; ++j) {
          const double m = additive_mask[i * nodes + j];
          if (std::isinf(m)) {
            pi[j] = m;
            continue;
          }
          double dot = 0.0;
          for (std::size_t c = 0; c < dh; ++c)
            dot += Q.at(base + i, c0 + c) * K.at(base + j, c0 + c);
          pi[j] = dot * score_scale + m;
        }
        softmax_inplace(std::span<double>(pi, nodes));
        for (std::size_t j = 0; j < nodes; ++j) {
          if (pi[j] == 0.0) continue;
          for (std::size_t c = 0; c < dh; ++c)
            y.at(base + i, c0 + c) += pi[j] * V.at(base + j, c0 + c);
        }
      }
    }
  }
  if (weights_out != nullptr) {
    *weights_out = Tensor({n, heads, nodes, nodes}, *probs);
  }
  return t.record(
      std::move(y), any_grad({&q, &k, &v}),
      [q, k, v, probs, n, nodes, heads, dh, score_scale](const Node& out) {
        const auto& Q = q->value;
        const auto& K = k->value;
        const auto& V = v->value;
        Tensor* gq = q->requires_grad ? &q->ensure_grad() : nullptr;
        Tensor* gk = k->requires_grad ? &k->ensure_grad() : nullptr;
        Tensor* gv = v->requires_grad ? &v->ensure_grad() : nullptr;
        std::vector<double> dp(nodes);
        for (std::size_t s = 0; s < n; ++s) {
          const std::size_t base = s * nodes;
          for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t c0 = h * dh;
            const double* p = probs->data() + ((s * heads + h) * nodes * nodes);
            for (std::size_t i = 0; i < nodes; ++i) {
              const double* pi = p + i * nodes;
              double dot = 0.0;
              for (std::size_t j = 0; j < nodes; ++j) {
                dp[j] = 0.0;
                if (pi[j] == 0.0) continue;
                for (std::size_t c = 0; c < dh; ++c) {
                  const double go = out.grad.at(base + i, c0 + c);
                  dp[j] += go * V.at(base + j, c0 + c);
                  if (gv) gv->at(base + j, c0 + c) += pi[j] * go;
                }
                dot += pi[j] * dp[j];
              }
              for (std::size_t j = 0; j < nodes; ++j) {
                if (pi[j] == 0.0) continue;
                const double ds = pi[j] * (dp[j] - dot) * score_scale;
                for (std::size_t c = 0; c < dh; ++c) {
                  if (gq) gq->at(base + i, c0 + c) += ds * K.at(base + j, c0 + c);
                  if (gk) gk->at(base + j, c0 + c) += ds * Q.at(base + i, c0 + c);
                }
              }
            }
          }
        }
      });
}

}  // namespace dagcausal::nn
