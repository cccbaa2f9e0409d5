#pragma once

#include <Eigen/Core>

#include "nbo/rng.hpp"

namespace nbo::design {

/// Random Latin hypercube in [0,1]^d: one point per stratum per axis.
Eigen::MatrixXd lhs(Eigen::Index n, Eigen::Index d, Rng& rng);

/// Best of `restarts` random Latin hypercubes by minimum pairwise distance.
/// The first candidate is the plain `lhs` draw from the same stream.
Eigen::MatrixXd lhs_maximin(Eigen::Index n, Eigen::Index d, Rng& rng, int restarts = 50);

double min_pairwise_distance(const Eigen::MatrixXd& points);

/// Each row repeated `replicates` times, copies kept adjacent.
Eigen::MatrixXd expand_replicates(const Eigen::MatrixXd& points, int replicates);

}  // namespace nbo::design
