#pragma once

#include <Eigen/Core>
#include <string>

#include "nbo/gp/dataset.hpp"
#include "nbo/rng.hpp"

namespace nbo::testbed {

enum class ProblemId { F1, F2, F3 };
enum class NoiseForm { Constant, Bad, Good };

std::string to_string(ProblemId id);
std::string to_string(NoiseForm form);
ProblemId problem_from_string(const std::string& name);
NoiseForm noise_form_from_string(const std::string& name);

/// Analytic test problem with cached noiseless extrema.
struct ProblemInstance {
    ProblemId id = ProblemId::F1;
    gp::Box domain;
    Eigen::VectorXd x_min;
    Eigen::VectorXd x_max;
    double f_min = 0.0;
    double f_max = 0.0;

    Eigen::Index dim() const { return domain.dim(); }
    double delta_f() const { return f_max - f_min; }
};

ProblemInstance make_problem(ProblemId id);

/// Noiseless response. Throws DomainError outside the closed domain.
double eval_true(const ProblemInstance& problem, const Eigen::VectorXd& x);

/// Heteroscedastic noise: variance a * (g(x) + b) with g = f (Good) or the
/// reflected f_max + f_min - f (Bad); Constant has sd = m * delta_f.
struct NoiseModel {
    NoiseForm form = NoiseForm::Constant;
    double magnitude = 0.05;
    double a = 0.0;
    double b = 0.0;
    double constant_sd = 0.0;

    double sd(const ProblemInstance& problem, const Eigen::VectorXd& x) const;
    /// The same rule as `sd` applied to a noiseless value.
    double sd_at_value(const ProblemInstance& problem, double f) const;
};

/// Solves a (f_min + b) = (0.25 m delta_f)^2, a (f_max + b) = (1.6 m delta_f)^2.
NoiseModel calibrate_noise(const ProblemInstance& problem, NoiseForm form, double magnitude);

/// eval_true(x) + sd(x) * z with z drawn from `rng`.
double sample_observation(const ProblemInstance& problem, const NoiseModel& noise,
                          const Eigen::VectorXd& x, Rng& rng);

}  // namespace nbo::testbed
