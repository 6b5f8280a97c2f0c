#include "frailty/logistic.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "frailty/errors.hpp"
#include "frailty/stats.hpp"

namespace frailty {

namespace {

double log_likelihood(const Eigen::VectorXd& eta, const std::vector<std::uint8_t>& y) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // log p = -log(1+e^{-eta}), log(1-p) = -log(1+e^{eta}); both stable forms.
    const double e = eta[i];
    ll += y[static_cast<std::size_t>(i)] ? -std::log1p(std::exp(-e))
                                         : -std::log1p(std::exp(e));
  }
  return ll;
}

}  // namespace

LogisticFit fit_logistic(const Design& design, const std::vector<std::uint8_t>& response,
                         const LogisticOptions& options) {
  const std::size_t n = design.n_rows;
  if (n == 0) throw DataError("fit_logistic: empty design");
  if (response.size() != n) {
    throw DataError("fit_logistic: response length does not match design rows");
  }
  for (const auto& col : design.columns) {
    if (col.size() != n) {
      throw DataError("fit_logistic: design column length does not match n_rows");
    }
  }
  std::size_t n_pos = 0;
  for (std::uint8_t y : response) n_pos += (y != 0);
  if (n_pos == 0 || n_pos == n) {
    throw DataError("fit_logistic: response contains a single class");
  }

  const std::size_t p_all = design.columns.size();
  LogisticFit fit;

  // Select a linearly independent column set by modified Gram-Schmidt over
  // [1, x_1, ..., x_p] in the given order, so a column is only dropped when
  // it is explained by *earlier* columns. This keeps alias resolution
  // deterministic under the caller's ordering.
  std::vector<Eigen::VectorXd> basis;
  std::vector<std::size_t> kept;  // indices into design.columns
  {
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    basis.push_back(ones / ones.norm());
    for (std::size_t j = 0; j < p_all; ++j) {
      Eigen::VectorXd v =
          Eigen::Map<const Eigen::VectorXd>(design.columns[j].data(), static_cast<Eigen::Index>(n));
      const double original = v.norm();
      for (const auto& b : basis) v -= b.dot(v) * b;
      // Re-orthogonalize once; plain MGS loses accuracy on near-dependent sets.
      for (const auto& b : basis) v -= b.dot(v) * b;
      if (original == 0.0 || v.norm() <= 1e-9 * original) {
        fit.aliased.push_back(j);
      } else {
        basis.push_back(v / v.norm());
        kept.push_back(j);
      }
    }
  }

  const std::size_t p = kept.size() + 1;  // intercept + retained columns
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  x.col(0).setOnes();
  for (std::size_t j = 0; j < kept.size(); ++j) {
    x.col(static_cast<Eigen::Index>(j + 1)) = Eigen::Map<const Eigen::VectorXd>(
        design.columns[kept[j]].data(), static_cast<Eigen::Index>(n));
  }
  Eigen::VectorXd yv(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) yv[static_cast<Eigen::Index>(i)] = response[i];

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  if (!options.initial.empty()) {
    if (options.initial.size() != p_all + 1) {
      throw DataError("fit_logistic: warm start length does not match design");
    }
    beta[0] = options.initial[0];
    for (std::size_t j = 0; j < kept.size(); ++j) {
      beta[static_cast<Eigen::Index>(j + 1)] = options.initial[kept[j] + 1];
    }
  }
  Eigen::VectorXd eta = (x * beta).cwiseMax(-30.0).cwiseMin(30.0);
  double ll = log_likelihood(eta, response);

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    fit.iterations = iter;
    Eigen::VectorXd prob(eta.size());
    Eigen::VectorXd weight(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double pi = inv_logit(eta[i]);
      prob[i] = pi;
      weight[i] = std::max(pi * (1.0 - pi), 1e-10);
    }
    const Eigen::VectorXd score = x.transpose() * (yv - prob);
    if (score.cwiseAbs().maxCoeff() < options.score_tolerance) {
      fit.converged = true;
      break;
    }
    const Eigen::MatrixXd info = x.transpose() * weight.asDiagonal() * x;
    const Eigen::VectorXd delta = info.ldlt().solve(score);

    // Step halving: accept the Newton step only when it does not decrease
    // the log-likelihood.
    double step = 1.0;
    double new_ll = ll;
    Eigen::VectorXd new_beta = beta;
    Eigen::VectorXd new_eta = eta;
    for (int half = 0; half < 30; ++half) {
      new_beta = beta + step * delta;
      new_eta = (x * new_beta).cwiseMax(-30.0).cwiseMin(30.0);
      new_ll = log_likelihood(new_eta, response);
      if (new_ll >= ll - 1e-12) break;
      step *= 0.5;
    }
    const double rel_change = std::fabs(new_ll - ll) / (std::fabs(new_ll) + 1e-10);
    beta = new_beta;
    eta = new_eta;
    ll = new_ll;
    if (rel_change < options.loglik_tolerance) {
      fit.converged = true;
      break;
    }
  }

  fit.separation = beta.cwiseAbs().maxCoeff() > options.separation_threshold;
  fit.log_likelihood = ll;
  fit.aic = 2.0 * static_cast<double>(p) - 2.0 * ll;

  fit.coefficients.assign(p_all + 1, 0.0);
  fit.coefficients[0] = beta[0];
  for (std::size_t j = 0; j < kept.size(); ++j) {
    fit.coefficients[kept[j] + 1] = beta[static_cast<Eigen::Index>(j + 1)];
  }
  return fit;
}

}  // namespace frailty
