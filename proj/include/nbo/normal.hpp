#pragma once

#include <vector>

namespace nbo {

constexpr double kPi = 3.14159265358979323846;

double normal_pdf(double z);
double normal_cdf(double z);

/// Gaussian differential entropy 0.5 * ln(2*pi*e*variance).
double gaussian_entropy(double variance);

/// Gauss-Hermite rule for expectations under N(0, 1):
/// E[g(Z)] ~= sum_i weights[i] * g(nodes[i]). Weights sum to one.
struct HermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

HermiteRule gauss_hermite_normal(int n);

}  // namespace nbo
