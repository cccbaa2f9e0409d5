#include "nbo/normal.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "nbo/error.hpp"

namespace nbo {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double gaussian_entropy(double variance) {
    return 0.5 * std::log(2.0 * kPi * std::exp(1.0) * variance);
}

// Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
HermiteRule gauss_hermite_normal(int n) {
    if (n < 1) fail(ErrorCode::InvalidArgument, "Gauss-Hermite rule needs at least one node");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
        jacobi(k - 1, k) = jacobi(k, k - 1);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
    HermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = eig.eigenvalues()(i);
        double v = eig.eigenvectors()(0, i);
        rule.weights[i] = v * v;
    }
    return rule;
}

}  // namespace nbo
