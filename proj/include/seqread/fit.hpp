#pragma once

// Damped least squares (Levenberg-Marquardt) with a covariance estimate.

#include <functional>

#include <Eigen/Dense>

namespace seqread {

struct LmOptions {
    double rtol = 1e-10;
    int max_iterations = 500;
    double fd_relative_step = 1e-7;
};

struct LmResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;  // sigma^2 (J^T J)^-1, sigma^2 = chi2 / (m - n)
    double chi2 = 0.0;
    int iterations = 0;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Minimizes |residuals(p)|^2. Jacobian by central differences.
/// Throws NonConvergence when the iteration budget is exhausted and
/// RankDeficient when J^T J is singular at the optimum.
LmResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd p0, const LmOptions& opts = {});

}  // namespace seqread
