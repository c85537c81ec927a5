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

#ifndef DAGCAUSAL_OBJECTIVES_H_
#define DAGCAUSAL_OBJECTIVES_H_

#include <optional>
#include <span>
#include <string>
#include <variant>

#include "dagcausal/autodiff.h"
#include "json.hpp"

namespace dagcausal {

struct GFormulaObjective {};
struct IptwObjective {};
struct AipwJointObjective {};

enum class NmmrVariant { kU, kV };

struct NmmrObjective {
  NmmrVariant variant = NmmrVariant::kU;
  // Median heuristic over the training rows when unset.
  std::optional<double> bandwidth;
  double lambda = 0.0;
};

using Objective =
    std::variant<GFormulaObjective, IptwObjective, AipwJointObjective, NmmrObjective>;

std::string objective_name(const Objective& objective);
// Throws ConfigError for a nonpositive bandwidth or negative lambda.
void validate_objective(const Objective& objective);

inline constexpr double kBceClamp = 1e-12;

// Mean squared error. Operands share a shape with at least one element.
nn::Var loss_gformula(nn::Tape& tape, const nn::Var& y_hat, const nn::Var& y);
// Binary cross entropy with a_hat clamped to [1e-12, 1 - 1e-12]; a must be
// 0/1 (DataError otherwise).
nn::Var loss_iptw(nn::Tape& tape, const nn::Var& a_hat, const nn::Var& a);
// (MSE + BCE) / 2.
nn::Var loss_aipw_joint(nn::Tape& tape, const nn::Var& y_hat, const nn::Var& y,
                        const nn::Var& a_hat, const nn::Var& a);

// K[i][j] = exp(-|u_i - u_j|^2 / (2 sigma^2)) over the rows of `rows`.
Tensor rbf_kernel_matrix(const Tensor& rows, double bandwidth);
// Median of the pairwise Euclidean distances between distinct rows.
double median_heuristic_bandwidth(const Tensor& rows);

// Kernel moment loss on residuals r = y - h:
//   U: r^T K0 r / (n (n - 1)) with K0 = K minus its diagonal (n >= 2),
//   V: r^T K r / n^2,
// plus lambda * (sum of squares of `params`) when lambda > 0.
nn::Var loss_nmmr(nn::Tape& tape, const nn::Var& y, const nn::Var& h,
                  const Tensor& kernel, NmmrVariant variant, double lambda,
                  std::span<const nn::Var> params);

}  // namespace dagcausal

#endif  // DAGCAUSAL_OBJECTIVES_H_
