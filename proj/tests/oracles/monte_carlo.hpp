#pragma once
// Monte-Carlo references for EI and KG built on the dense oracle.

#include <random>
#include <vector>

#include "dense_gp.hpp"

namespace oracle {

// E[max(y* - Y, 0)] * clamp(1 - noise / s^2, 0, 1) with Y ~ N(mu, s^2),
// antithetic pairs.
inline double mc_ei(const DenseGP& gp, const Eigen::VectorXd& u, double y_star, int draws, std::uint64_t seed) {
    const double mu = gp.mean(u);
    const double var = gp.variance(u);
    const double s = std::sqrt(var);
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> z;
    double acc = 0.0;
    for (int i = 0; i < draws / 2; ++i) {
        double e = z(eng);
        acc += std::max(y_star - (mu + s * e), 0.0) + std::max(y_star - (mu - s * e), 0.0);
    }
    double noise = gp.yscale * gp.yscale * gp.sigma2 * gp.tau;
    double factor = std::clamp(1.0 - noise / var, 0.0, 1.0);
    return acc / (2.0 * (draws / 2)) * factor;
}

// Knowledge gradient over candidates = grid plus u, by conditioning a dense
// GP on the augmented data set. The updated mean is affine in the new
// observation, so two dense solves give it for every draw.
inline double mc_kg(const DenseGP& gp, const Eigen::VectorXd& u, const Eigen::MatrixXd& grid, int draws,
                    std::uint64_t seed) {
    const int n = static_cast<int>(gp.x.rows());
    const int g = static_cast<int>(grid.rows());
    Eigen::MatrixXd cand(g + 1, grid.cols());
    cand.topRows(g) = grid;
    cand.row(g) = u.transpose();

    Eigen::MatrixXd xa(n + 1, gp.x.cols());
    xa.topRows(n) = gp.x;
    xa.row(n) = u.transpose();
    auto updated_means = [&](double ynew) {
        Eigen::VectorXd ya(n + 1);
        ya.head(n) = gp.y;
        ya[n] = ynew;
        DenseGP aug(gp.family, gp.omega, gp.tau, gp.p, xa, ya);
        Eigen::VectorXd m(g + 1);
        for (int c = 0; c <= g; ++c) m[c] = aug.mean(cand.row(c).transpose());
        return m;
    };
    const double mu = gp.mean(u);
    const double s = std::sqrt(gp.variance(u));
    Eigen::VectorXd base = updated_means(mu);
    Eigen::VectorXd slope = updated_means(mu + s) - base;  // per unit z

    double current = std::numeric_limits<double>::infinity();
    for (int c = 0; c <= g; ++c) current = std::min(current, gp.mean(cand.row(c).transpose()));

    std::mt19937_64 eng(seed);
    std::normal_distribution<double> z;
    double acc = 0.0;
    for (int i = 0; i < draws / 2; ++i) {
        double e = z(eng);
        acc += (base + slope * e).minCoeff() + (base - slope * e).minCoeff();
    }
    return current - acc / (2.0 * (draws / 2));
}

}  // namespace oracle
