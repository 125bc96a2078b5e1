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

#include "synthtwin/glm/poisson.h"

#include <cmath>
#include <map>
#include <stdexcept>

#include "synthtwin/kernels/kernels.h"
#include "synthtwin/tabular/ops.h"

namespace synthtwin::glm {
namespace {

double LogLik(const Patterns& p, const Eigen::VectorXd& w) {
  const Eigen::VectorXd eta = p.x * w;
  double total = 0.0;
  for (Eigen::Index k = 0; k < eta.size(); ++k) {
    total += p.positives(k) * eta(k) - p.count(k) * std::exp(eta(k));
  }
  return total;
}

// Adds the ridge when the information matrix is badly conditioned.
bool Regularize(Eigen::MatrixXd& info, const FitOptions& options) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo > 0.0 && hi / lo <= options.max_condition) return false;
  info.diagonal().array() += options.ridge;
  return true;
}

}  // namespace

nlohmann::json RegressionFit::ToJson() const {
  nlohmann::json coefs = nlohmann::json::array();
  for (Eigen::Index k = 0; k < coefficients.size(); ++k) {
    nlohmann::json c = {{"estimate", coefficients(k)}, {"std_error", std_errors(k)}};
    if (!names.empty()) c["name"] = names[k];
    coefs.push_back(c);
  }
  return {{"coefficients", coefs},     {"converged", converged},
          {"iterations", iterations},  {"ridge_applied", ridge_applied},
          {"separated", separated},    {"max_abs_score", max_abs_score}};
}

RegressionFit RegressionFit::FromJson(const nlohmann::json& j) {
  RegressionFit f;
  const auto& coefs = j.at("coefficients");
  f.coefficients.resize(coefs.size());
  f.std_errors.resize(coefs.size());
  for (std::size_t k = 0; k < coefs.size(); ++k) {
    f.coefficients(k) = coefs[k].at("estimate").get<double>();
    f.std_errors(k) = coefs[k].at("std_error").get<double>();
    if (coefs[k].contains("name")) f.names.push_back(coefs[k]["name"].get<std::string>());
  }
  if (!f.names.empty() && f.names.size() != coefs.size()) {
    throw std::invalid_argument("regression fit: some coefficients are unnamed");
  }
  f.converged = j.at("converged").get<bool>();
  f.iterations = j.value("iterations", 0);
  f.ridge_applied = j.value("ridge_applied", false);
  f.separated = j.value("separated", false);
  f.max_abs_score = j.value("max_abs_score", 0.0);
  return f;
}

Patterns CompressRows(const tabular::Dataset& ds) {
  std::map<std::vector<tabular::Code>, std::pair<double, double>> cells;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    auto row = ds.row(i);
    auto& cell = cells[std::vector<tabular::Code>(row.begin(), row.end())];
    cell.first += 1.0;
    cell.second += ds.target(i);
  }
  const tabular::Schema& schema = ds.schema();
  Patterns p;
  p.x = Eigen::MatrixXd::Zero(cells.size(), schema.EncodedWidth());
  p.count.resize(cells.size());
  p.positives.resize(cells.size());
  p.rows = ds.rows();
  Eigen::Index k = 0;
  for (const auto& [codes, cell] : cells) {
    p.x(k, 0) = 1.0;
    for (std::size_t j = 0; j < codes.size(); ++j) {
      if (codes[j] > 0) p.x(k, schema.EncodedOffset(j) + codes[j] - 1) = 1.0;
    }
    p.count(k) = cell.first;
    p.positives(k) = cell.second;
    ++k;
  }
  return p;
}

RegressionFit FitPoisson(const Patterns& patterns, const FitOptions& options) {
  const Eigen::Index p = patterns.x.cols();
  if (patterns.count.size() != patterns.x.rows() ||
      patterns.positives.size() != patterns.x.rows()) {
    throw std::invalid_argument("fit_poisson: size mismatch");
  }
  if (patterns.rows < static_cast<std::size_t>(p)) {
    throw std::invalid_argument("fit_poisson: fewer rows than coefficients");
  }
  if ((patterns.positives.array() < 0.0).any() ||
      (patterns.positives.array() > patterns.count.array()).any()) {
    throw std::invalid_argument("fit_poisson: target must be 0 or 1");
  }

  RegressionFit fit;
  Eigen::VectorXd w = options.start.value_or(Eigen::VectorXd::Zero(p));
  if (w.size() != p) throw std::invalid_argument("fit_poisson: start has wrong length");

  kernels::PoissonStats stats;
  for (;;) {
    stats = kernels::omp::PoissonScoreInfo(patterns.x, patterns.count,
                                           patterns.positives, w);
    fit.max_abs_score = stats.score.cwiseAbs().maxCoeff();
    if (fit.max_abs_score < options.score_tolerance) {
      fit.converged = true;
      break;
    }
    if (fit.iterations == options.max_iterations) break;
    ++fit.iterations;
    if (Regularize(stats.info, options)) fit.ridge_applied = true;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(stats.info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw std::runtime_error("fit_poisson: information matrix is singular");
    }
    const Eigen::VectorXd step = ldlt.solve(stats.score);
    // Step halving until the log-likelihood does not decrease. Near the
    // optimum the change is below rounding, so allow that much slack.
    const double current = LogLik(patterns, w);
    const double floor = current - 1e-12 * (1.0 + std::abs(current));
    double t = 1.0;
    Eigen::VectorXd next = w + step;
    while (!(LogLik(patterns, next) >= floor) && t > 1e-10) {
      t *= 0.5;
      next = w + t * step;
    }
    w = next;
  }

  if (Regularize(stats.info, options)) fit.ridge_applied = true;
  const Eigen::MatrixXd cov =
      stats.info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.coefficients = w;
  fit.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();

  const Eigen::VectorXd eta = patterns.x * w;
  for (Eigen::Index k = 0; k < eta.size(); ++k) {
    if (patterns.count(k) > 0 && std::exp(eta(k)) < options.separation_rate) {
      fit.separated = true;
    }
  }
  if (fit.separated) fit.converged = false;
  return fit;
}

RegressionFit FitPoisson(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const FitOptions& options) {
  if (x.rows() != y.size()) throw std::invalid_argument("fit_poisson: size mismatch");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) {
      throw std::invalid_argument("fit_poisson: target must be 0 or 1");
    }
  }
  Patterns p{x, Eigen::VectorXd::Ones(x.rows()), y, static_cast<std::size_t>(x.rows())};
  return FitPoisson(p, options);
}

RegressionFit FitPoisson(const tabular::Dataset& ds, const FitOptions& options) {
  RegressionFit fit = FitPoisson(CompressRows(ds), options);
  fit.names = ds.schema().EncodedColumnNames();
  return fit;
}

int Predict(const tabular::Schema& schema, std::span<const double> w,
            std::span<const tabular::Code> x) {
  if (w.size() != schema.EncodedWidth()) {
    throw std::invalid_argument("predict: weight length does not match schema");
  }
  return tabular::LinearPredictor(schema, w.data(), x) > 0.0 ? 1 : 0;
}

double TestLogLikelihood(std::span<const double> w, const tabular::Dataset& test,
                         bool normalize) {
  if (test.empty()) throw std::invalid_argument("test_log_likelihood: empty test set");
  if (w.size() != test.schema().EncodedWidth()) {
    throw std::invalid_argument("test_log_likelihood: weight length mismatch");
  }
  const double total = kernels::omp::PoissonLogLik(test, w);
  return normalize ? total / static_cast<double>(test.rows()) : total;
}

double TestLogLikelihood(std::span<const double> w, const Patterns& test,
                         bool normalize) {
  if (test.rows == 0) throw std::invalid_argument("test_log_likelihood: empty test set");
  if (static_cast<Eigen::Index>(w.size()) != test.x.cols()) {
    throw std::invalid_argument("test_log_likelihood: weight length mismatch");
  }
  const Eigen::VectorXd eta =
      test.x * Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
  double total = 0.0;
  for (Eigen::Index k = 0; k < eta.size(); ++k) {
    total += test.positives(k) * eta(k) - test.count(k) * std::exp(eta(k));
  }
  return normalize ? total / static_cast<double>(test.rows) : total;
}

}  // namespace synthtwin::glm
