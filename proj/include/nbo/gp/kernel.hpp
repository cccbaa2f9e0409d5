#pragma once

#include <Eigen/Core>
#include <string>

namespace nbo::gp {

enum class KernelKind { SquaredExponential, PowerExponential, Matern };

/// Matern smoothness restricted to the half-integer closed forms.
enum class MaternNu { OneHalf, ThreeHalves, FiveHalves };

double nu_value(MaternNu nu);

/// Covariance family plus its shape parameter. `power` is only read for
/// PowerExponential (p in (0, 2]), `nu` only for Matern.
struct KernelFamily {
    KernelKind kind = KernelKind::Matern;
    double power = 2.0;
    MaternNu nu = MaternNu::FiveHalves;

    static KernelFamily squared_exponential() { return {KernelKind::SquaredExponential}; }
    static KernelFamily power_exponential(double p) { return {KernelKind::PowerExponential, p}; }
    static KernelFamily matern(MaternNu nu) { return {KernelKind::Matern, 2.0, nu}; }

    /// Throws InvalidArgument when the shape parameter is out of range.
    void validate() const;

    bool operator==(const KernelFamily&) const = default;
};

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

/// Correlation r(x, x2) with inverse lengthscales 10^omega_i.
///   SE:       exp(-sum 10^w_i (x_i - x2_i)^2)
///   PowerExp: exp(-sum 10^w_i |x_i - x2_i|^p)
///   Matern:   closed form in dist = sqrt(sum 10^w_i (x_i - x2_i)^2), rho = 1
double correlation(const KernelFamily& kernel, const Eigen::VectorXd& omega,
                   const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2);

/// sigma2 * r(x, x2). Throws InvalidArgument on non-finite input.
double kernel_eval(const KernelFamily& kernel, const Eigen::VectorXd& omega, double sigma2,
                   const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2);

/// Correlation as a function of the weighted distance, Matern only.
double matern_correlation(MaternNu nu, double dist);

/// Correlation matrix between the rows of `a` and the rows of `b`.
/// `scales` holds 10^omega_i, precomputed by the caller.
Eigen::MatrixXd correlation_matrix(const KernelFamily& kernel, const Eigen::VectorXd& scales,
                                   const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Symmetric correlation matrix of the rows of `a` (unit diagonal).
Eigen::MatrixXd correlation_matrix(const KernelFamily& kernel, const Eigen::VectorXd& scales,
                                   const Eigen::MatrixXd& a);

Eigen::VectorXd lengthscale_weights(const Eigen::VectorXd& omega);

}  // namespace nbo::gp
