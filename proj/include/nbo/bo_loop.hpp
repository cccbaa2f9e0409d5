#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "nbo/acquisition.hpp"
#include "nbo/gp/gp.hpp"
#include "nbo/testbed.hpp"

namespace nbo::bo {

enum class RecommendationRule { PosteriorMean, BestObserved };

std::string to_string(RecommendationRule rule);

struct InitialDesignSpec {
    int samples_per_dim = 5;  // unique points = samples_per_dim * d
    int replicates = 2;
    int restarts = 50;
};

struct RunConfig {
    testbed::ProblemId problem = testbed::ProblemId::F1;
    testbed::NoiseForm noise_form = testbed::NoiseForm::Constant;
    double noise_magnitude = 0.05;  // 0 runs noiselessly
    gp::KernelFamily kernel = gp::KernelFamily::matern(gp::MaternNu::FiveHalves);
    acq::AcquisitionSpec acquisition;
    InitialDesignSpec initial;
    int budget = 0;                 // total observations; 0 = 50 d
    std::vector<int> checkpoints;   // empty = {25d, round(37.5d), 50d}
    RecommendationRule rule = RecommendationRule::PosteriorMean;
    gp::SearchConfig search;        // seed is overridden per fit
    std::uint64_t seed = 0;

    int total_budget(Eigen::Index d) const;
    std::vector<int> checkpoint_counts(Eigen::Index d) const;
    int initial_budget(Eigen::Index d) const;
    void validate() const;
};

/// Standard checkpoints {25d, round-half-up(37.5d), 50d}.
std::vector<int> standard_checkpoints(Eigen::Index d);

struct Record {
    int t = 0;             // 1-based observation count
    Eigen::VectorXd x;     // raw coordinates
    double y = 0.0;
    bool initial = false;
    bool fallback = false;  // chosen by the max-variance fallback
};

struct Checkpoint {
    int observations = 0;
    Eigen::VectorXd recommendation;  // raw coordinates
    double gap = 0.0;
};

struct Diagnostics {
    int fits = 0;
    int jitter_events = 0;
    int acquisition_fallbacks = 0;
    std::vector<double> loglik;
};

struct Trace {
    std::string config_hash;
    std::vector<Record> records;
    std::vector<Checkpoint> checkpoints;
    Diagnostics diagnostics;
    RecommendationRule rule = RecommendationRule::PosteriorMean;
    bool failed = false;
    std::string failure;
};

/// Seeds of the hyperparameter search and of the acquisition at a given
/// data size; shared with the campaign service so offline replays match.
std::uint64_t fit_seed(std::uint64_t run_seed, Eigen::Index n);
std::uint64_t acquisition_seed(std::uint64_t run_seed, Eigen::Index n);

/// Initial design, then fit -> maximize acquisition -> observe until the
/// budget is spent. Deterministic given `config.seed`.
Trace run_bo(const RunConfig& config);

/// Observed location (normalized) with the smallest posterior mean; ties go
/// to the lexicographically smallest input.
Eigen::VectorXd recommend(const gp::FittedGP& model);

/// Observed location (normalized) with the smallest raw response.
Eigen::VectorXd best_observed(const gp::Dataset& data);

Eigen::VectorXd recommend(const gp::FittedGP& model, RecommendationRule rule);

/// eval_true(recommendation) - f_min, recommendation in raw coordinates.
double gap(const testbed::ProblemInstance& problem, const Eigen::VectorXd& recommendation);

/// Normalized point with the largest predictive variance on the scan grid.
Eigen::VectorXd max_variance_point(const gp::FittedGP& model);

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Trace& trace);
std::string config_hash(const RunConfig& config);

}  // namespace nbo::bo
