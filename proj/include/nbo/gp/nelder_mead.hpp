#pragma once

#include <Eigen/Core>
#include <functional>

namespace nbo::gp {

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
};

/// Box-constrained Nelder-Mead minimization. Trial points are projected onto
/// the box; objective failures should be reported as +infinity.
/// Stops after `max_evals` objective calls or when the simplex has collapsed
/// (value spread below `ftol` and vertex spread below `xtol`).
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& start, const Eigen::VectorXd& step,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             int max_evals, double ftol = 1e-10, double xtol = 1e-8);

}  // namespace nbo::gp
