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

#ifndef DAGCAUSAL_ERRORS_H_
#define DAGCAUSAL_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dagcausal {

// Base of every error raised by the library. The exit code is what the CLI
// returns when the error escapes a subcommand.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, int exit_code = 1)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

// Tensor shapes that do not fit the operation.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what, 1) {}
};

// Caller violated a documented precondition.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(what, 1) {}
};

// Invalid configuration: unknown method, missing DAG role, bad grid, ...
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, 2) {}
};

// Input data that violates its schema.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what, 3) {}
};

// A metric's reference vector has zero variance.
class DegenerateReferenceError : public ContractError {
 public:
  explicit DegenerateReferenceError(const std::string& what) : ContractError(what) {}
};

// Too few rows to fit a model, e.g. a treatment arm smaller than a leaf.
class InsufficientDataError : public DataError {
 public:
  explicit InsufficientDataError(const std::string& what) : DataError(what) {}
};

// Training produced a non-finite loss.
class DivergedError : public Error {
 public:
  // `context` prefixes the message, e.g. the replicate that failed.
  DivergedError(std::size_t epoch, std::size_t batch, const std::string& context = "")
      : Error(context + "training diverged at epoch " + std::to_string(epoch) +
                  ", batch " + std::to_string(batch),
              4),
        epoch_(epoch),
        batch_(batch) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

// Every candidate of a hyperparameter search failed.
class SelectionError : public Error {
 public:
  SelectionError(const std::string& what, std::string table_csv)
      : Error(what, 5), table_csv_(std::move(table_csv)) {}
  const std::string& table_csv() const { return table_csv_; }

 private:
  std::string table_csv_;
};

}  // namespace dagcausal

#endif  // DAGCAUSAL_ERRORS_H_
