#include "nbo/gp/kernel.hpp"

#include <cmath>

#include "nbo/error.hpp"

namespace nbo::gp {

namespace {

// Sum of weighted per-dimension terms; the kernel-specific exponent is
// applied to |dx| (PowerExponential) or dx^2 (SE / Matern distance).
inline double weighted_sum(const KernelFamily& k, const Eigen::VectorXd& scales, const double* x,
                           const double* x2, Eigen::Index d, Eigen::Index stride_x,
                           Eigen::Index stride_x2) {
    double acc = 0.0;
    if (k.kind == KernelKind::PowerExponential && k.power != 2.0) {
        for (Eigen::Index i = 0; i < d; ++i) {
            double diff = std::abs(x[i * stride_x] - x2[i * stride_x2]);
            if (diff > 0.0) acc += scales[i] * std::pow(diff, k.power);
        }
    } else {
        for (Eigen::Index i = 0; i < d; ++i) {
            double diff = x[i * stride_x] - x2[i * stride_x2];
            acc += scales[i] * diff * diff;
        }
    }
    return acc;
}

inline double from_weighted_sum(const KernelFamily& k, double acc) {
    if (k.kind == KernelKind::Matern) return matern_correlation(k.nu, std::sqrt(acc));
    return std::exp(-acc);
}

}  // namespace

double nu_value(MaternNu nu) {
    switch (nu) {
        case MaternNu::OneHalf: return 0.5;
        case MaternNu::ThreeHalves: return 1.5;
        case MaternNu::FiveHalves: return 2.5;
    }
    return 2.5;
}

void KernelFamily::validate() const {
    if (kind == KernelKind::PowerExponential && !(power > 0.0 && power <= 2.0))
        fail(ErrorCode::InvalidArgument, "power-exponential exponent must lie in (0, 2]");
}

std::string to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::SquaredExponential: return "Gaussian";
        case KernelKind::PowerExponential: return "Power";
        case KernelKind::Matern: return "Matern";
    }
    return "Matern";
}

KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "Gaussian" || name == "SquaredExponential" || name == "SE")
        return KernelKind::SquaredExponential;
    if (name == "Power" || name == "PowerExponential") return KernelKind::PowerExponential;
    if (name == "Matern") return KernelKind::Matern;
    fail(ErrorCode::InvalidArgument, "unknown covariance family '" + name + "'");
}

double matern_correlation(MaternNu nu, double dist) {
    switch (nu) {
        case MaternNu::OneHalf: return std::exp(-dist);
        case MaternNu::ThreeHalves: {
            double z = std::sqrt(3.0) * dist;
            return (1.0 + z) * std::exp(-z);
        }
        case MaternNu::FiveHalves: {
            double z = std::sqrt(5.0) * dist;
            return (1.0 + z + z * z / 3.0) * std::exp(-z);
        }
    }
    return 0.0;
}

Eigen::VectorXd lengthscale_weights(const Eigen::VectorXd& omega) {
    Eigen::VectorXd s(omega.size());
    for (Eigen::Index i = 0; i < omega.size(); ++i) s[i] = std::pow(10.0, omega[i]);
    return s;
}

double correlation(const KernelFamily& kernel, const Eigen::VectorXd& omega,
                   const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2) {
    if (x.size() != omega.size() || x2.size() != omega.size())
        fail(ErrorCode::InvalidArgument, "kernel input dimension mismatch");
    if (!x.allFinite() || !x2.allFinite() || !omega.allFinite())
        fail(ErrorCode::InvalidArgument, "kernel inputs must be finite");
    Eigen::VectorXd scales = lengthscale_weights(omega);
    double acc = weighted_sum(kernel, scales, x.data(), x2.data(), x.size(), 1, 1);
    return from_weighted_sum(kernel, acc);
}

double kernel_eval(const KernelFamily& kernel, const Eigen::VectorXd& omega, double sigma2,
                   const Eigen::Ref<const Eigen::VectorXd>& x,
                   const Eigen::Ref<const Eigen::VectorXd>& x2) {
    if (!std::isfinite(sigma2)) fail(ErrorCode::InvalidArgument, "kernel variance must be finite");
    return sigma2 * correlation(kernel, omega, x, x2);
}

Eigen::MatrixXd correlation_matrix(const KernelFamily& kernel, const Eigen::VectorXd& scales,
                                   const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const Eigen::Index d = a.cols();
    Eigen::MatrixXd r(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            r(i, j) = from_weighted_sum(
                kernel, weighted_sum(kernel, scales, &a(i, 0), &b(j, 0), d, a.rows(), b.rows()));
    return r;
}

Eigen::MatrixXd correlation_matrix(const KernelFamily& kernel, const Eigen::VectorXd& scales,
                                   const Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    const Eigen::Index d = a.cols();
    Eigen::MatrixXd r(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        r(j, j) = 1.0;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double v = from_weighted_sum(
                kernel, weighted_sum(kernel, scales, &a(i, 0), &a(j, 0), d, n, n));
            r(i, j) = v;
            r(j, i) = v;
        }
    }
    return r;
}

}  // namespace nbo::gp
