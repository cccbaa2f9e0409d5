#include "nbo/design.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "nbo/error.hpp"

namespace nbo::design {

Eigen::MatrixXd lhs(Eigen::Index n, Eigen::Index d, Rng& rng) {
    if (n < 1 || d < 1) fail(ErrorCode::InvalidArgument, "Latin hypercube needs n >= 1 and d >= 1");
    Eigen::MatrixXd pts(n, d);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < d; ++k) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng.engine());
        for (Eigen::Index i = 0; i < n; ++i) {
            double u = rng.uniform();
            pts(i, k) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + u) / static_cast<double>(n);
        }
    }
    return pts;
}

double min_pairwise_distance(const Eigen::MatrixXd& points) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (Eigen::Index j = i + 1; j < points.rows(); ++j)
            best = std::min(best, (points.row(i) - points.row(j)).norm());
    return best;
}

Eigen::MatrixXd lhs_maximin(Eigen::Index n, Eigen::Index d, Rng& rng, int restarts) {
    if (restarts < 1) fail(ErrorCode::InvalidArgument, "maximin LHS needs at least one restart");
    Eigen::MatrixXd best = lhs(n, d, rng);
    double best_dist = min_pairwise_distance(best);
    for (int r = 1; r < restarts; ++r) {
        Eigen::MatrixXd cand = lhs(n, d, rng);
        double dist = min_pairwise_distance(cand);
        if (dist > best_dist) {
            best = std::move(cand);
            best_dist = dist;
        }
    }
    return best;
}

Eigen::MatrixXd expand_replicates(const Eigen::MatrixXd& points, int replicates) {
    if (replicates < 1 || replicates > 3)
        fail(ErrorCode::InvalidArgument, "replicates must be 1, 2 or 3");
    Eigen::MatrixXd out(points.rows() * replicates, points.cols());
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (int r = 0; r < replicates; ++r) out.row(i * replicates + r) = points.row(i);
    return out;
}

}  // namespace nbo::design
