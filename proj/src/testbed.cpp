#include "nbo/testbed.hpp"

#include <cmath>

#include "nbo/error.hpp"
#include "nbo/normal.hpp"

namespace nbo::testbed {

namespace {

constexpr double kLowSdFactor = 0.25;
constexpr double kHighSdFactor = 1.6;

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

double f1(double x) { return (3.0 * x - 2.0) * (3.0 * x - 2.0) * std::sin(12.0 * x - 4.0); }

double f2(double x1, double x2) {
    const double a = 15.0 * x1 - 5.0;
    const double b = 15.0 * x2;
    const double t = b - 5.1 * a * a / (4.0 * kPi * kPi) + 5.0 * a / kPi - 6.0;
    return (t * t + (10.0 - 10.0 / (8.0 * kPi)) * std::cos(a) - 44.81) / 51.95;
}

double f3(double x1, double x2) {
    const double x1s = x1 * x1;
    return 4.0 * x1s - 2.1 * x1s * x1s + x1s * x1s * x1s / 3.0 + x1 * x2 - 4.0 * x2 * x2 +
           4.0 * x2 * x2 * x2 * x2;
}

}  // namespace

std::string to_string(ProblemId id) {
    switch (id) {
        case ProblemId::F1: return "f1";
        case ProblemId::F2: return "f2";
        case ProblemId::F3: return "f3";
    }
    return "f1";
}

std::string to_string(NoiseForm form) {
    switch (form) {
        case NoiseForm::Constant: return "Constant";
        case NoiseForm::Bad: return "Bad";
        case NoiseForm::Good: return "Good";
    }
    return "Constant";
}

ProblemId problem_from_string(const std::string& name) {
    if (name == "f1") return ProblemId::F1;
    if (name == "f2") return ProblemId::F2;
    if (name == "f3") return ProblemId::F3;
    fail(ErrorCode::InvalidArgument, "unknown problem '" + name + "'");
}

NoiseForm noise_form_from_string(const std::string& name) {
    if (name == "Constant") return NoiseForm::Constant;
    if (name == "Bad") return NoiseForm::Bad;
    if (name == "Good") return NoiseForm::Good;
    fail(ErrorCode::InvalidArgument, "unknown noise form '" + name + "'");
}

// Extrema from a dense grid followed by bounded quasi-Newton refinement;
// the unit tests re-derive them independently.
ProblemInstance make_problem(ProblemId id) {
    ProblemInstance p;
    p.id = id;
    switch (id) {
        case ProblemId::F1:
            p.domain = {vec({0.0}), vec({1.0})};
            p.x_min = vec({0.17518836917345829});
            p.x_max = vec({0.0});
            break;
        case ProblemId::F2:
            p.domain = {vec({0.0, 0.0}), vec({1.0, 1.0})};
            p.x_min = vec({0.12389381941810618, 0.8183333318091229});
            p.x_max = vec({0.0, 0.0});
            break;
        case ProblemId::F3:
            p.domain = {vec({-2.0, -1.0}), vec({2.0, 1.0})};
            p.x_min = vec({-0.08984201545403352, 0.7126564008092376});
            p.x_max = vec({-2.0, -1.0});
            break;
    }
    p.f_min = eval_true(p, p.x_min);
    p.f_max = eval_true(p, p.x_max);
    return p;
}

double eval_true(const ProblemInstance& problem, const Eigen::VectorXd& x) {
    if (!problem.domain.contains(x, 1e-12))
        fail(ErrorCode::DomainError, "input outside the admissible domain of " + to_string(problem.id));
    switch (problem.id) {
        case ProblemId::F1: return f1(x[0]);
        case ProblemId::F2: return f2(x[0], x[1]);
        case ProblemId::F3: return f3(x[0], x[1]);
    }
    return 0.0;
}

double NoiseModel::sd_at_value(const ProblemInstance& problem, double f) const {
    if (form == NoiseForm::Constant) return constant_sd;
    double g = form == NoiseForm::Good ? f : problem.f_max + problem.f_min - f;
    return std::sqrt(std::max(a * (g + b), 0.0));
}

double NoiseModel::sd(const ProblemInstance& problem, const Eigen::VectorXd& x) const {
    return sd_at_value(problem, eval_true(problem, x));
}

NoiseModel calibrate_noise(const ProblemInstance& problem, NoiseForm form, double magnitude) {
    if (!(magnitude > 0.0) || !std::isfinite(magnitude))
        fail(ErrorCode::InvalidArgument, "noise magnitude must be positive");
    NoiseModel nm;
    nm.form = form;
    nm.magnitude = magnitude;
    const double scale = magnitude * problem.delta_f();
    nm.constant_sd = scale;
    if (form == NoiseForm::Constant) return nm;
    const double lo = (kLowSdFactor * scale) * (kLowSdFactor * scale);
    const double hi = (kHighSdFactor * scale) * (kHighSdFactor * scale);
    // Good and Bad share the linear system; Bad evaluates it on the reflected
    // response, whose minimum sits at the noiseless maximum.
    nm.a = (hi - lo) / problem.delta_f();
    nm.b = lo / nm.a - problem.f_min;
    return nm;
}

double sample_observation(const ProblemInstance& problem, const NoiseModel& noise,
                          const Eigen::VectorXd& x, Rng& rng) {
    const double f = eval_true(problem, x);
    const double z = rng.normal();
    return f + noise.sd_at_value(problem, f) * z;
}

}  // namespace nbo::testbed
