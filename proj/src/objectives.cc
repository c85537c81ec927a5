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

#include "dagcausal/objectives.h"

#include <algorithm>
#include <cmath>

#include "dagcausal/errors.h"

namespace dagcausal {

std::string objective_name(const Objective& objective) {
  struct {
    std::string operator()(const GFormulaObjective&) const { return "gformula"; }
    std::string operator()(const IptwObjective&) const { return "iptw"; }
    std::string operator()(const AipwJointObjective&) const { return "aipw-joint"; }
    std::string operator()(const NmmrObjective& o) const {
      return o.variant == NmmrVariant::kU ? "nmmr-u" : "nmmr-v";
    }
  } visitor;
  return std::visit(visitor, objective);
}

void validate_objective(const Objective& objective) {
  if (const auto* n = std::get_if<NmmrObjective>(&objective)) {
    if (n->bandwidth && !(*n->bandwidth > 0.0)) {
      throw ConfigError("NMMR kernel bandwidth must be positive");
    }
    if (!(n->lambda >= 0.0)) throw ConfigError("NMMR lambda must be nonnegative");
  }
}

namespace {

void require_nonempty_pair(const char* op, const nn::Var& a, const nn::Var& b) {
  if (a->value.size() == 0 || b->value.size() == 0) {
    throw ContractError(std::string(op) + " needs at least one observation");
  }
  if (a->value.shape() != b->value.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_string(a->value.shape()) + " vs " +
                         shape_string(b->value.shape()));
  }
}

}  // namespace

nn::Var loss_gformula(nn::Tape& tape, const nn::Var& y_hat, const nn::Var& y) {
  require_nonempty_pair("loss_gformula", y_hat, y);
  return nn::mean(tape, nn::square(tape, nn::sub(tape, y_hat, y)));
}

nn::Var loss_iptw(nn::Tape& tape, const nn::Var& a_hat, const nn::Var& a) {
  require_nonempty_pair("loss_iptw", a_hat, a);
  for (double v : a->value.data()) {
    if (v != 0.0 && v != 1.0) {
      throw DataError("loss_iptw: treatment labels must be 0 or 1");
    }
  }
  const nn::Var p = nn::clamp(tape, a_hat, kBceClamp, 1.0 - kBceClamp);
  Tensor one_minus_a = a->value;
  for (double& v : one_minus_a.data()) v = 1.0 - v;
  const nn::Var na = nn::constant(std::move(one_minus_a));
  const nn::Var log_p = nn::log(tape, p);
  const nn::Var log_q = nn::log(tape, nn::add_scalar(tape, nn::scale(tape, p, -1.0), 1.0));
  const nn::Var ll = nn::add(tape, nn::mul(tape, a, log_p), nn::mul(tape, na, log_q));
  return nn::scale(tape, nn::mean(tape, ll), -1.0);
}

nn::Var loss_aipw_joint(nn::Tape& tape, const nn::Var& y_hat, const nn::Var& y,
                        const nn::Var& a_hat, const nn::Var& a) {
  if (y_hat->value.size() != a_hat->value.size()) {
    throw DimensionError("loss_aipw_joint: outcome and treatment lengths differ");
  }
  const nn::Var mse = loss_gformula(tape, y_hat, y);
  const nn::Var bce = loss_iptw(tape, a_hat, a);
  return nn::scale(tape, nn::add(tape, mse, bce), 0.5);
}

Tensor rbf_kernel_matrix(const Tensor& rows, double bandwidth) {
  if (!(bandwidth > 0.0)) throw ContractError("RBF bandwidth must be positive");
  const std::size_t n = rows.rank() == 1 ? rows.size() : rows.rows();
  const std::size_t p = rows.rank() == 1 ? 1 : rows.cols();
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  Tensor k({n, n}, 1.0);
  const auto v = rows.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < p; ++c) {
        const double d = v[i * p + c] - v[j * p + c];
        d2 += d * d;
      }
      const double kij = std::exp(-d2 * inv);
      k.at(i, j) = kij;
      k.at(j, i) = kij;
    }
  }
  return k;
}

double median_heuristic_bandwidth(const Tensor& rows) {
  const std::size_t n = rows.rank() == 1 ? rows.size() : rows.rows();
  const std::size_t p = rows.rank() == 1 ? 1 : rows.cols();
  if (n < 2) throw ContractError("median heuristic needs at least two rows");
  std::vector<double> dist;
  dist.reserve(n * (n - 1) / 2);
  const auto v = rows.data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < p; ++c) {
        const double d = v[i * p + c] - v[j * p + c];
        d2 += d * d;
      }
      dist.push_back(std::sqrt(d2));
    }
  }
  const std::size_t mid = dist.size() / 2;
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
  double med = dist[mid];
  if (dist.size() % 2 == 0) {
    const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  return med > 0.0 ? med : 1.0;
}

nn::Var loss_nmmr(nn::Tape& tape, const nn::Var& y, const nn::Var& h,
                  const Tensor& kernel, NmmrVariant variant, double lambda,
                  std::span<const nn::Var> params) {
  require_nonempty_pair("loss_nmmr", y, h);
  if (lambda < 0.0) throw ContractError("loss_nmmr: lambda must be nonnegative");
  const std::size_t n = y->value.size();
  const double nd = static_cast<double>(n);
  const nn::Var r = nn::sub(tape, y, h);
  nn::Var risk;
  if (variant == NmmrVariant::kU) {
    if (n < 2) throw ContractError("loss_nmmr: the U-statistic needs n >= 2");
    Tensor k0 = kernel;
    for (std::size_t i = 0; i < n; ++i) k0.at(i, i) = 0.0;
    risk = nn::scale(tape, nn::quadratic_form(tape, r, k0), 1.0 / (nd * (nd - 1.0)));
  } else {
    risk = nn::scale(tape, nn::quadratic_form(tape, r, kernel), 1.0 / (nd * nd));
  }
  if (lambda > 0.0) {
    risk = nn::add(tape, risk, nn::scale(tape, nn::sum_squares(tape, params), lambda));
  }
  return risk;
}

}  // namespace dagcausal
