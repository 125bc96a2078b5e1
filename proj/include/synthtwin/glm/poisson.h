// Copyright 2026 The Synthtwin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Poisson regression with log link, fitted by Fisher scoring.

#ifndef SYNTHTWIN_GLM_POISSON_H_
#define SYNTHTWIN_GLM_POISSON_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "synthtwin/tabular/dataset.h"

namespace synthtwin::glm {

struct FitOptions {
  int max_iterations = 100;
  double score_tolerance = 1e-8;
  double ridge = 1e-8;
  double max_condition = 1e12;
  // A fitted rate below this on a training row means the MLE is at infinity.
  double separation_rate = 1e-6;
  std::optional<Eigen::VectorXd> start;
};

struct RegressionFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd std_errors;
  bool converged = false;
  int iterations = 0;
  bool ridge_applied = false;
  bool separated = false;
  double max_abs_score = 0.0;
  std::vector<std::string> names;  // empty for raw design-matrix fits

  nlohmann::json ToJson() const;
  static RegressionFit FromJson(const nlohmann::json& j);
};

// Rows of a categorical data set collapsed to distinct design rows: row k of
// `x` occurs count(k) times with positives(k) ones. The log-likelihood and its
// derivatives only depend on these.
struct Patterns {
  Eigen::MatrixXd x;
  Eigen::VectorXd count;
  Eigen::VectorXd positives;
  std::size_t rows = 0;  // sum of count
};

// Distinct rows are ordered lexicographically by category codes, so the result
// does not depend on row order.
Patterns CompressRows(const tabular::Dataset& ds);

// Throws std::invalid_argument for non-binary y, n < p or size mismatch and
// std::runtime_error if the information matrix is singular even after the
// ridge.
RegressionFit FitPoisson(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const FitOptions& options = {});
RegressionFit FitPoisson(const Patterns& patterns, const FitOptions& options = {});
// Coefficients are named after the encoded columns.
RegressionFit FitPoisson(const tabular::Dataset& ds, const FitOptions& options = {});

// 1 iff w^T x~ > 0.
int Predict(const tabular::Schema& schema, std::span<const double> w,
            std::span<const tabular::Code> x);

// sum over rows of y eta - exp(eta) - log(y!), optionally divided by the row
// count. Throws std::invalid_argument on an empty test set.
double TestLogLikelihood(std::span<const double> w, const tabular::Dataset& test,
                         bool normalize);
double TestLogLikelihood(std::span<const double> w, const Patterns& test,
                         bool normalize);

}  // namespace synthtwin::glm

#endif  // SYNTHTWIN_GLM_POISSON_H_
