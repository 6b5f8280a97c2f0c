#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace frailty {

// Column-oriented design matrix for regression; the intercept is implicit
// and always fitted first.
struct Design {
  std::vector<std::vector<double>> columns;  // each of length n_rows
  std::size_t n_rows = 0;
};

struct LogisticOptions {
  int max_iterations = 50;
  double score_tolerance = 1e-8;      // max |gradient| convergence test
  double loglik_tolerance = 1e-10;    // relative log-likelihood change test
  double separation_threshold = 15.0; // |coefficient| beyond this flags separation
  // Optional warm start: intercept followed by one value per design column
  // (aliased columns ignored). Empty means start from zero.
  std::vector<double> initial;
};

struct LogisticFit {
  // Intercept first, then one entry per design column; aliased columns keep
  // a slot with coefficient 0.
  std::vector<double> coefficients;
  // Indices (into Design::columns) dropped as linearly dependent on earlier
  // columns; earlier columns always win, so refits are order-stable.
  std::vector<std::size_t> aliased;
  bool converged = false;
  bool separation = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  double aic = 0.0;  // 2k - 2*log_likelihood, k = fitted coefficients
};

// Maximum-likelihood logistic regression via iteratively reweighted least
// squares with step halving. Requires at least one positive and one
// negative response. Linearly dependent columns are dropped (recorded in
// `aliased`); quasi-complete separation is detected by runaway coefficient
// magnitude and flagged, with the fit still returned.
LogisticFit fit_logistic(const Design& design, const std::vector<std::uint8_t>& response,
                         const LogisticOptions& options = {});

}  // namespace frailty
