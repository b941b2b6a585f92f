#pragma once

#include <Eigen/Dense>
#include <functional>

namespace readout::detail {

// Residuals r(theta) for parameters theta in natural units.
using ResidualFn = std::function<void(const Eigen::VectorXd& theta, Eigen::VectorXd& residuals)>;

struct LeastSquaresResult {
    Eigen::VectorXd theta;
    Eigen::MatrixXd covariance;  // s^2 (J^T J)^-1 in natural units
    double ssr = 0.0;
    int dof = 0;
    int evaluations = 0;
    bool converged = false;
};

// Levenberg-Marquardt on theta = theta0 + scales .* u, so every search
// coordinate is O(1). The covariance uses a central-difference Jacobian at
// the optimum.
LeastSquaresResult fit_least_squares(const ResidualFn& residual, int n_residuals,
                                     const Eigen::VectorXd& theta0, const Eigen::VectorXd& scales,
                                     int max_evaluations = 4000);

}  // namespace readout::detail
