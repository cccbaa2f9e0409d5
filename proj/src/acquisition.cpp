#include "nbo/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nbo/error.hpp"
#include "nbo/normal.hpp"
#include "nbo/rng.hpp"

namespace nbo::acq {

namespace {

constexpr double kTinySd = 1e-12;
// Relative to the prior variance: below this the prediction carries no
// information and KG is zero.
constexpr double kTinyRelVariance = 1e-10;
// Noise of the hallucinated observation at a sampled minimizer, relative to
// the prior variance.
constexpr double kHallucinationNoise = 1e-6;
constexpr Eigen::Index kChunk = 2048;

}  // namespace

std::string to_string(AcquisitionKind kind) {
    switch (kind) {
        case AcquisitionKind::UC: return "UC";
        case AcquisitionKind::PI: return "PI";
        case AcquisitionKind::EI: return "EI";
        case AcquisitionKind::KG: return "KG";
        case AcquisitionKind::PES: return "PES";
    }
    return "EI";
}

AcquisitionKind acquisition_kind_from_string(const std::string& name) {
    if (name == "UC" || name == "UCB") return AcquisitionKind::UC;
    if (name == "PI") return AcquisitionKind::PI;
    if (name == "EI") return AcquisitionKind::EI;
    if (name == "KG") return AcquisitionKind::KG;
    if (name == "PES") return AcquisitionKind::PES;
    fail(ErrorCode::InvalidArgument, "unknown acquisition function '" + name + "'");
}

std::string to_string(KgExpectation method) {
    return method == KgExpectation::GaussHermite ? "gauss_hermite" : "exact";
}

KgExpectation kg_expectation_from_string(const std::string& name) {
    if (name == "exact") return KgExpectation::Exact;
    if (name == "gauss_hermite") return KgExpectation::GaussHermite;
    fail(ErrorCode::InvalidArgument, "unknown KG expectation method '" + name + "'");
}

double expected_min_of_lines(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() == 0 || a.size() != b.size())
        fail(ErrorCode::InvalidArgument, "line intercepts and slopes must be non-empty and equal in size");
    // Steepest first: the minimum follows lines of decreasing slope as z grows.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(a.size()));
    for (Eigen::Index i = 0; i < a.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
        if (b[i] != b[j]) return b[i] > b[j];
        return a[i] < a[j];
    });
    auto cross = [&](Eigen::Index i, Eigen::Index j) { return (a[j] - a[i]) / (b[i] - b[j]); };
    std::vector<Eigen::Index> hull;
    std::vector<double> start;  // z where hull[k] becomes the minimum
    for (Eigen::Index i : order) {
        if (!hull.empty() && b[hull.back()] == b[i]) continue;
        while (!hull.empty()) {
            const double z = cross(hull.back(), i);
            if (z <= start.back()) {
                hull.pop_back();
                start.pop_back();
                continue;
            }
            hull.push_back(i);
            start.push_back(z);
            break;
        }
        if (hull.empty()) {
            hull.push_back(i);
            start.push_back(-std::numeric_limits<double>::infinity());
        }
    }
    double total = 0.0;
    for (std::size_t k = 0; k < hull.size(); ++k) {
        const double lo = start[k];
        const double hi = k + 1 < hull.size() ? start[k + 1] : std::numeric_limits<double>::infinity();
        const double mass = normal_cdf(hi) - normal_cdf(lo);
        const double pdf_lo = std::isfinite(lo) ? normal_pdf(lo) : 0.0;
        const double pdf_hi = std::isfinite(hi) ? normal_pdf(hi) : 0.0;
        total += a[hull[k]] * mass + b[hull[k]] * (pdf_lo - pdf_hi);
    }
    return total;
}

void AcquisitionSpec::validate() const {
    if (!(pi > 0.0) && kind == AcquisitionKind::UC)
        fail(ErrorCode::InvalidArgument, "UC weight must be positive");
    if (!(lambda >= 0.0)) fail(ErrorCode::InvalidArgument, "PI offset must be non-negative");
    if (kg_quadrature < 5) fail(ErrorCode::InvalidArgument, "KG needs at least 5 quadrature nodes");
    if (pes_star_samples < 8) fail(ErrorCode::InvalidArgument, "PES needs at least 8 minimizer samples");
    if (candidate_grid < 0 || candidate_grid == 1)
        fail(ErrorCode::InvalidArgument, "candidate grid resolution must be 0 or >= 2");
}

Incumbent Incumbent::from(const Eigen::VectorXd& y, double lambda) {
    if (y.size() == 0) fail(ErrorCode::InvalidArgument, "incumbent needs observations");
    Incumbent inc;
    inc.y_star = y.minCoeff();
    inc.y_max = y.maxCoeff();
    inc.y_target = inc.y_star - lambda * (inc.y_max - inc.y_star);
    return inc;
}

double uc_value(double mean, double variance, double pi) {
    return pi * std::sqrt(std::max(variance, 0.0)) - mean;
}

double pi_value(double mean, double variance, double target) {
    double sd = std::sqrt(std::max(variance, 0.0));
    if (sd <= kTinySd) return mean < target ? 1.0 : 0.0;
    return normal_cdf((target - mean) / sd);
}

double classic_ei(double mean, double variance, double y_star) {
    double sd = std::sqrt(std::max(variance, 0.0));
    if (sd <= kTinySd) return 0.0;
    double u = (y_star - mean) / sd;
    return std::max(sd * (u * normal_cdf(u) + normal_pdf(u)), 0.0);
}

double ei_noise_factor(double variance, double noise_variance, EiNoiseFactor form) {
    if (noise_variance <= 0.0) return 1.0;
    double ratio = form == EiNoiseFactor::VarianceRatio ? noise_variance / variance
                                                        : noise_variance / std::sqrt(variance);
    return std::clamp(1.0 - ratio, 0.0, 1.0);
}

double alpha_uc(const gp::FittedGP& model, const Eigen::VectorXd& x, double pi) {
    auto p = gp::posterior(model, x);
    return uc_value(p.mean, p.variance, pi);
}

double alpha_pi(const gp::FittedGP& model, const Eigen::VectorXd& x, const Incumbent& incumbent) {
    auto p = gp::posterior(model, x);
    return pi_value(p.mean, p.variance, incumbent.y_target);
}

double alpha_ei(const gp::FittedGP& model, const Eigen::VectorXd& x, const Incumbent& incumbent,
                EiNoiseFactor form) {
    auto p = gp::posterior(model, x);
    if (std::sqrt(std::max(p.variance, 0.0)) <= kTinySd) return 0.0;
    return classic_ei(p.mean, p.variance, incumbent.y_star) *
           ei_noise_factor(p.variance, model.noise_variance(), form);
}

double alpha_kg(const gp::FittedGP& model, const Eigen::VectorXd& x, const AcquisitionSpec& spec) {
    AcquisitionSpec s = spec;
    s.kind = AcquisitionKind::KG;
    return Acquisition(model, s)(x);
}

double alpha_pes(const gp::FittedGP& model, const Eigen::VectorXd& x, const AcquisitionSpec& spec) {
    AcquisitionSpec s = spec;
    s.kind = AcquisitionKind::PES;
    return Acquisition(model, s)(x);
}

Eigen::MatrixXd unit_grid(Eigen::Index d, int per_dim) {
    if (d < 1 || per_dim < 2) fail(ErrorCode::InvalidArgument, "grid needs d >= 1 and >= 2 points per axis");
    Eigen::Index total = 1;
    for (Eigen::Index k = 0; k < d; ++k) total *= per_dim;
    Eigen::MatrixXd grid(total, d);
    for (Eigen::Index row = 0; row < total; ++row) {
        Eigen::Index rem = row;
        for (Eigen::Index k = d - 1; k >= 0; --k) {
            grid(row, k) = static_cast<double>(rem % per_dim) / (per_dim - 1);
            rem /= per_dim;
        }
    }
    return grid;
}

int scan_resolution(Eigen::Index d) {
    switch (d) {
        case 1: return 1001;
        case 2: return 101;
        case 3: return 21;
        default: return 11;
    }
}

int candidate_resolution(Eigen::Index d) {
    switch (d) {
        case 1: return 101;
        case 2: return 21;
        case 3: return 9;
        default: return 6;
    }
}

Acquisition::Acquisition(const gp::FittedGP& model, AcquisitionSpec spec)
    : model_(model), spec_(spec) {
    spec_.validate();
    incumbent_ = Incumbent::from(model.dataset().y(), spec_.lambda);
    if (spec_.kind != AcquisitionKind::KG && spec_.kind != AcquisitionKind::PES) return;

    const Eigen::Index d = model.dataset().dim();
    int res = spec_.candidate_grid > 0 ? spec_.candidate_grid : candidate_resolution(d);
    candidates_ = unit_grid(d, res);
    Eigen::VectorXd var;
    model.predict_batch(candidates_, candidate_mean_, var);

    if (spec_.kind == AcquisitionKind::KG) {
        if (spec_.kg_expectation == KgExpectation::Exact) return;
        HermiteRule rule = gauss_hermite_normal(spec_.kg_quadrature);
        nodes_ = std::move(rule.nodes);
        weights_ = std::move(rule.weights);
        return;
    }

    // Thompson draws of the latent surface on the candidate grid.
    Eigen::MatrixXd cov = model.latent_covariance_matrix(candidates_, candidates_);
    const double prior = model.prior_variance();
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (double jitter : {1e-10, 1e-8, 1e-6, 1e-4}) {
        Eigen::MatrixXd c = cov;
        c.diagonal().array() += jitter * prior;
        llt.compute(c);
        if (llt.info() == Eigen::Success) break;
    }
    if (llt.info() != Eigen::Success)
        fail(ErrorCode::AcquisitionFailure, "posterior covariance on the candidate grid is not factorizable");
    Eigen::MatrixXd lower = llt.matrixL();
    Rng rng(spec_.seed);
    const Eigen::Index g = candidates_.rows();
    Eigen::VectorXd z(g);
    for (int s = 0; s < spec_.pes_star_samples; ++s) {
        for (Eigen::Index i = 0; i < g; ++i) z[i] = rng.normal();
        Eigen::VectorXd draw = candidate_mean_ + lower * z;
        Eigen::Index idx = 0;
        for (Eigen::Index i = 1; i < g; ++i)
            if (draw[i] < draw[idx]) idx = i;
        star_index_.push_back(idx);
    }
    stars_.resize(static_cast<Eigen::Index>(star_index_.size()), d);
    star_variance_.resize(static_cast<Eigen::Index>(star_index_.size()));
    for (std::size_t s = 0; s < star_index_.size(); ++s) {
        auto row = static_cast<Eigen::Index>(s);
        stars_.row(row) = candidates_.row(star_index_[s]);
        star_variance_[row] = cov(star_index_[s], star_index_[s]);
    }
}

double Acquisition::operator()(const Eigen::VectorXd& x) const {
    if (x.size() != model_.dataset().dim()) fail(ErrorCode::InvalidArgument, "acquisition input dimension mismatch");
    gp::posterior(model_, x);  // input validation
    Eigen::VectorXd clamped = x.cwiseMax(0.0).cwiseMin(1.0);
    return evaluate(clamped.transpose())[0];
}

Eigen::VectorXd Acquisition::evaluate(const Eigen::MatrixXd& pts) const {
    Eigen::VectorXd mean, var;
    model_.predict_batch(pts, mean, var);
    Eigen::VectorXd out(pts.rows());
    switch (spec_.kind) {
        case AcquisitionKind::UC:
            for (Eigen::Index i = 0; i < pts.rows(); ++i) out[i] = uc_value(mean[i], var[i], spec_.pi);
            return out;
        case AcquisitionKind::PI:
            for (Eigen::Index i = 0; i < pts.rows(); ++i)
                out[i] = pi_value(mean[i], var[i], incumbent_.y_target);
            return out;
        case AcquisitionKind::EI: {
            const double noise = model_.noise_variance();
            for (Eigen::Index i = 0; i < pts.rows(); ++i)
                out[i] = classic_ei(mean[i], var[i], incumbent_.y_star) *
                         ei_noise_factor(var[i], noise, spec_.ei_noise);
            return out;
        }
        case AcquisitionKind::KG: return evaluate_kg(pts, mean, var);
        case AcquisitionKind::PES: return evaluate_pes(pts, var);
    }
    return out;
}

// Discrete KG on the candidate grid plus x itself:
//   mu*_t - E_Z[min_c (mu(c) + cov(c, x) / s(x) * Z)]
// with Z the standardized hallucinated observation at x.
Eigen::VectorXd Acquisition::evaluate_kg(const Eigen::MatrixXd& pts, const Eigen::VectorXd& mean,
                                         const Eigen::VectorXd& var) const {
    const double noise = model_.noise_variance();
    const double floor = kTinyRelVariance * model_.prior_variance();
    const double grid_min = candidate_mean_.minCoeff();
    Eigen::MatrixXd cross = model_.latent_covariance_matrix(candidates_, pts);
    const Eigen::Index g = candidates_.rows();
    Eigen::VectorXd out(pts.rows());
    Eigen::VectorXd slope(g), intercept(g + 1), line_slope(g + 1);
    for (Eigen::Index j = 0; j < pts.rows(); ++j) {
        if (var[j] <= floor) {
            out[j] = 0.0;
            continue;
        }
        const double sd = std::sqrt(var[j]);
        slope = cross.col(j) / sd;
        const double self_slope = std::max(var[j] - noise, 0.0) / sd;
        const double current = std::min(grid_min, mean[j]);
        double expected = 0.0;
        if (spec_.kg_expectation == KgExpectation::Exact) {
            intercept.head(g) = candidate_mean_;
            intercept[g] = mean[j];
            line_slope.head(g) = slope;
            line_slope[g] = self_slope;
            out[j] = current - expected_min_of_lines(intercept, line_slope);
            continue;
        }
        for (std::size_t q = 0; q < nodes_.size(); ++q) {
            const double z = nodes_[q];
            double m = mean[j] + self_slope * z;
            for (Eigen::Index c = 0; c < g; ++c) m = std::min(m, candidate_mean_[c] + slope[c] * z);
            expected += weights_[q] * m;
        }
        out[j] = current - expected;
    }
    return out;
}

// H(Y(x)) minus the average entropy after a near-noiseless hallucinated
// observation at each sampled minimizer.
Eigen::VectorXd Acquisition::evaluate_pes(const Eigen::MatrixXd& pts, const Eigen::VectorXd& var) const {
    const double prior = model_.prior_variance();
    Eigen::MatrixXd cross = model_.latent_covariance_matrix(pts, stars_);
    const double floor = 1e-12 * prior;
    Eigen::VectorXd out(pts.rows());
    for (Eigen::Index j = 0; j < pts.rows(); ++j) {
        const double v = std::max(var[j], floor);
        double acc = 0.0;
        for (Eigen::Index s = 0; s < stars_.rows(); ++s) {
            double c = cross(j, s);
            double reduced = v - c * c / (star_variance_[s] + kHallucinationNoise * prior);
            reduced = std::clamp(reduced, floor, v);
            acc += gaussian_entropy(reduced);
        }
        out[j] = gaussian_entropy(v) - acc / static_cast<double>(stars_.rows());
    }
    return out;
}

Maximum maximize(const BatchAcquisition& alpha, Eigen::Index d, int resolution) {
    const int res = resolution > 0 ? resolution : scan_resolution(d);
    const Eigen::MatrixXd grid = unit_grid(d, res);
    Eigen::Index best = -1;
    double best_value = -std::numeric_limits<double>::infinity();
    for (Eigen::Index start = 0; start < grid.rows(); start += kChunk) {
        Eigen::Index len = std::min(kChunk, grid.rows() - start);
        Eigen::VectorXd vals = alpha(grid.middleRows(start, len));
        for (Eigen::Index i = 0; i < len; ++i)
            if (std::isfinite(vals[i]) && (best < 0 || vals[i] > best_value)) {
                best = start + i;
                best_value = vals[i];
            }
    }
    if (best < 0) fail(ErrorCode::AcquisitionFailure, "acquisition is non-finite on the whole scan grid");

    // Compass search from the best grid point; accepts strict improvements only.
    Eigen::VectorXd x = grid.row(best).transpose();
    double value = best_value;
    double step = 0.5 / (res - 1);
    const double min_step = 1e-7;
    int evals = 0;
    while (step >= min_step && evals < 400) {
        bool moved = false;
        for (Eigen::Index k = 0; k < d && !moved; ++k) {
            for (double dir : {-1.0, 1.0}) {
                Eigen::VectorXd trial = x;
                trial[k] = std::clamp(trial[k] + dir * step, 0.0, 1.0);
                if (trial[k] == x[k]) continue;
                double v = alpha(trial.transpose())[0];
                ++evals;
                if (std::isfinite(v) && v > value) {
                    x = trial;
                    value = v;
                    moved = true;
                    break;
                }
            }
        }
        if (!moved) step *= 0.5;
    }
    return {x, value, best_value};
}

Maximum maximize_acquisition(const gp::FittedGP& model, const AcquisitionSpec& spec) {
    Acquisition acq(model, spec);
    return maximize([&](const Eigen::MatrixXd& pts) { return acq.evaluate(pts); }, model.dataset().dim());
}

}  // namespace nbo::acq
