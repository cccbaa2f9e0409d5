#include "nbo/gp/gp.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <vector>

#include "nbo/error.hpp"
#include "nbo/gp/nelder_mead.hpp"
#include "nbo/rng.hpp"

namespace nbo::gp {

namespace {

constexpr double kJitterLadder[] = {0.0, 1e-10, 1e-8, 1e-6};
constexpr double kMinSigma2 = 1e-12;

bool has_duplicate_rows(const Eigen::MatrixXd& x) {
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = i + 1; j < x.rows(); ++j)
            if (x.row(i) == x.row(j)) return true;
    return false;
}

// Cholesky of V = R + tau I with the jitter ladder; returns the jitter used.
double factor_with_jitter(const Eigen::MatrixXd& r, double tau, bool duplicates,
                          Eigen::LLT<Eigen::MatrixXd>& llt) {
    if (tau <= 0.0 && duplicates)
        fail(ErrorCode::SingularCovariance, "duplicated inputs without a nugget give a singular covariance");
    const Eigen::Index n = r.rows();
    for (double jitter : kJitterLadder) {
        Eigen::MatrixXd v = r;
        v.diagonal().array() += tau + jitter;
        llt.compute(v);
        if (llt.info() != Eigen::Success) continue;
        const auto& l = llt.matrixLLT();
        bool ok = true;
        for (Eigen::Index i = 0; i < n && ok; ++i) ok = std::isfinite(l(i, i)) && l(i, i) > 0.0;
        if (ok) return jitter;
    }
    fail(ErrorCode::SingularCovariance, "covariance factorization failed after the jitter ladder");
}

struct ProfileSolve {
    double jitter = 0.0;
    Eigen::MatrixXd whitened_basis;
    Eigen::VectorXd whitened_residual;
    Eigen::LLT<Eigen::MatrixXd> trend_llt;
    ProfileLikelihood result;
};

// GLS trend, sigma2 and profile likelihood through triangular solves.
void solve_profile(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& ys,
                   ProfileSolve& out) {
    const Eigen::Index n = ys.size();
    auto lower = llt.matrixL();
    Eigen::MatrixXd basis = Eigen::MatrixXd::Ones(n, 1);
    out.whitened_basis = lower.solve(basis);
    Eigen::VectorXd wy = lower.solve(ys);
    out.trend_llt.compute(out.whitened_basis.transpose() * out.whitened_basis);
    Eigen::VectorXd beta = out.trend_llt.solve(out.whitened_basis.transpose() * wy);
    out.whitened_residual = wy - out.whitened_basis * beta;
    double sigma2 = out.whitened_residual.squaredNorm() / static_cast<double>(n);
    if (!(sigma2 >= kMinSigma2))
        fail(ErrorCode::DegenerateData, "estimated process variance vanishes (constant data)");
    double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    out.result.sigma2 = sigma2;
    out.result.beta = beta;
    out.result.loglik = -static_cast<double>(n) * std::log(sigma2) - logdet;
}

double radical_inverse(std::uint64_t i, std::uint64_t base) {
    double inv = 1.0 / static_cast<double>(base);
    double f = inv;
    double r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

// Halton points with a seeded Cranley-Patterson rotation.
Eigen::MatrixXd scrambled_halton(int count, int dims, std::uint64_t seed) {
    static constexpr std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
    if (dims > 10) fail(ErrorCode::InvalidArgument, "start design supports at most 10 dimensions");
    Rng rng(seed);
    Eigen::VectorXd shift(dims);
    for (int j = 0; j < dims; ++j) shift[j] = rng.uniform();
    Eigen::MatrixXd pts(count, dims);
    for (int i = 0; i < count; ++i)
        for (int j = 0; j < dims; ++j) {
            double v = radical_inverse(static_cast<std::uint64_t>(i + 1), primes[j]) + shift[j];
            pts(i, j) = v - std::floor(v);
        }
    return pts;
}

// Per-dimension pairwise differences over the strict lower triangle,
// precomputed once per fit. Power-exponential entries hold log|dx| so the
// shape parameter costs one exp per entry instead of a pow.
class PairwiseCache {
public:
    PairwiseCache(const Eigen::MatrixXd& x, bool log_abs) : n_(x.rows()) {
        const Eigen::Index m = n_ * (n_ - 1) / 2;
        for (Eigen::Index k = 0; k < x.cols(); ++k) {
            Eigen::ArrayXd diff(m);
            Eigen::Index t = 0;
            for (Eigen::Index j = 0; j < n_; ++j)
                for (Eigen::Index i = j + 1; i < n_; ++i) {
                    double v = x(i, k) - x(j, k);
                    diff[t++] = log_abs ? std::log(std::abs(v)) : v * v;
                }
            diffs_.push_back(std::move(diff));
        }
    }

    // Writes R + diag into the lower triangle of `v`. Correlations below
    // 1e-150 are flushed to zero so the factorization never meets subnormals.
    void fill(const KernelFamily& kernel, const Eigen::VectorXd& scales, double diag, Eigen::MatrixXd& v) const {
        const Eigen::Index m = n_ * (n_ - 1) / 2;
        Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(m);
        if (kernel.kind == KernelKind::PowerExponential) {
            for (std::size_t k = 0; k < diffs_.size(); ++k)
                acc += scales[static_cast<Eigen::Index>(k)] * (kernel.power * diffs_[k]).exp();
        } else {
            for (std::size_t k = 0; k < diffs_.size(); ++k) acc += scales[static_cast<Eigen::Index>(k)] * diffs_[k];
        }
        Eigen::ArrayXd c;
        if (kernel.kind != KernelKind::Matern) {
            c = (-acc.min(kFlushExponent)).exp();
        } else {
            Eigen::ArrayXd z = acc.sqrt().min(kFlushExponent);
            switch (kernel.nu) {
                case MaternNu::OneHalf: c = (-z).exp(); break;
                case MaternNu::ThreeHalves:
                    z *= std::sqrt(3.0);
                    c = (1.0 + z) * (-z).exp();
                    break;
                case MaternNu::FiveHalves:
                    z *= std::sqrt(5.0);
                    c = (1.0 + z + z.square() / 3.0) * (-z).exp();
                    break;
            }
        }
        c = (c < 1e-150).select(0.0, c);
        v.resize(n_, n_);
        Eigen::Index t = 0;
        for (Eigen::Index j = 0; j < n_; ++j) {
            v(j, j) = 1.0 + diag;
            const Eigen::Index len = n_ - j - 1;
            v.col(j).tail(len) = c.segment(t, len).matrix();
            t += len;
        }
    }

private:
    static constexpr double kFlushExponent = 400.0;
    Eigen::Index n_;
    std::vector<Eigen::ArrayXd> diffs_;
};

constexpr MaternNu kNuLevels[] = {MaternNu::OneHalf, MaternNu::ThreeHalves, MaternNu::FiveHalves};

}  // namespace

Standardization Standardization::of(const Eigen::VectorXd& y) {
    Standardization s;
    const double n = static_cast<double>(y.size());
    s.mean = y.mean();
    if (y.size() > 1) {
        double var = (y.array() - s.mean).square().sum() / (n - 1.0);
        if (var > 0.0) s.scale = std::sqrt(var);
    }
    return s;
}

ProfileLikelihood profile_loglik(const Dataset& data, const KernelFamily& kernel,
                                 const Eigen::VectorXd& omega, double tau) {
    kernel.validate();
    if (data.size() < 2) fail(ErrorCode::InvalidArgument, "profile likelihood needs n >= 2");
    if (omega.size() != data.dim()) fail(ErrorCode::InvalidArgument, "omega dimension mismatch");
    if (!omega.allFinite() || !std::isfinite(tau) || tau < 0.0)
        fail(ErrorCode::InvalidArgument, "hyperparameters must be finite with tau >= 0");
    Eigen::MatrixXd x = data.x_unit();
    Eigen::VectorXd y = data.y();
    Standardization stdz = Standardization::of(y);
    Eigen::VectorXd ys = (y.array() - stdz.mean) / stdz.scale;
    Eigen::MatrixXd r = correlation_matrix(kernel, lengthscale_weights(omega), x);
    Eigen::LLT<Eigen::MatrixXd> llt;
    ProfileSolve solve;
    solve.jitter = factor_with_jitter(r, tau, has_duplicate_rows(x), llt);
    solve_profile(llt, ys, solve);
    return solve.result;
}

FittedGP FittedGP::condition(Dataset data, KernelFamily kernel, Eigen::VectorXd omega, double tau) {
    kernel.validate();
    if (data.size() < 1) fail(ErrorCode::InvalidArgument, "cannot condition on an empty dataset");
    if (omega.size() != data.dim()) fail(ErrorCode::InvalidArgument, "omega dimension mismatch");
    FittedGP gp;
    gp.x_ = data.x_unit();
    Eigen::VectorXd y = data.y();
    gp.stdz_ = Standardization::of(y);
    Eigen::VectorXd ys = (y.array() - gp.stdz_.mean) / gp.stdz_.scale;
    gp.scales_ = lengthscale_weights(omega);
    Eigen::MatrixXd r = correlation_matrix(kernel, gp.scales_, gp.x_);
    Eigen::LLT<Eigen::MatrixXd> llt;
    ProfileSolve solve;
    solve.jitter = factor_with_jitter(r, tau, has_duplicate_rows(gp.x_), llt);
    solve_profile(llt, ys, solve);

    gp.data_ = std::move(data);
    gp.kernel_ = kernel;
    gp.hyper_ = {std::move(omega), tau, solve.result.sigma2, solve.result.beta};
    gp.chol_ = llt.matrixL();
    gp.whitened_basis_ = std::move(solve.whitened_basis);
    gp.whitened_residual_ = std::move(solve.whitened_residual);
    gp.trend_llt_ = std::move(solve.trend_llt);
    gp.loglik_ = solve.result.loglik;
    gp.jitter_ = solve.jitter;
    return gp;
}

Eigen::MatrixXd FittedGP::whitened_cross(const Eigen::MatrixXd& pts) const {
    Eigen::MatrixXd cross = correlation_matrix(kernel_, scales_, x_, pts);
    chol_.triangularView<Eigen::Lower>().solveInPlace(cross);
    return cross;
}

void FittedGP::predict_batch(const Eigen::MatrixXd& pts, Eigen::VectorXd& mean,
                             Eigen::VectorXd& variance) const {
    Eigen::MatrixXd a = whitened_cross(pts);
    // W = m(x) - M^T V^{-1} r(x), constant basis m(x) = 1
    Eigen::MatrixXd w = Eigen::MatrixXd::Ones(1, pts.rows()) - whitened_basis_.transpose() * a;
    Eigen::MatrixXd trend = trend_llt_.solve(w);
    const double beta = hyper_.beta[0];
    const double scale2 = stdz_.scale * stdz_.scale;
    mean.resize(pts.rows());
    variance.resize(pts.rows());
    for (Eigen::Index j = 0; j < pts.rows(); ++j) {
        double mu = beta + a.col(j).dot(whitened_residual_);
        double s2 = 1.0 - a.col(j).squaredNorm() + w.col(j).dot(trend.col(j)) + hyper_.tau;
        mean[j] = stdz_.mean + stdz_.scale * mu;
        variance[j] = scale2 * hyper_.sigma2 * std::max(s2, 0.0);
    }
}

PosteriorPrediction FittedGP::predict(const Eigen::VectorXd& x_unit) const {
    Eigen::VectorXd mean, variance;
    predict_batch(x_unit.transpose(), mean, variance);
    return {mean[0], variance[0]};
}

Eigen::MatrixXd FittedGP::latent_covariance_matrix(const Eigen::MatrixXd& a,
                                                   const Eigen::MatrixXd& b) const {
    Eigen::MatrixXd wa = whitened_cross(a);
    Eigen::MatrixXd wb = whitened_cross(b);
    Eigen::MatrixXd ta = Eigen::MatrixXd::Ones(1, a.rows()) - whitened_basis_.transpose() * wa;
    Eigen::MatrixXd tb = Eigen::MatrixXd::Ones(1, b.rows()) - whitened_basis_.transpose() * wb;
    Eigen::MatrixXd cov = correlation_matrix(kernel_, scales_, a, b) - wa.transpose() * wb +
                          ta.transpose() * trend_llt_.solve(tb);
    return cov * (hyper_.sigma2 * stdz_.scale * stdz_.scale);
}

double FittedGP::latent_covariance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return latent_covariance_matrix(a.transpose(), b.transpose())(0, 0);
}

PosteriorPrediction posterior(const FittedGP& model, const Eigen::VectorXd& x_unit) {
    if (x_unit.size() != model.dataset().dim())
        fail(ErrorCode::InvalidArgument, "posterior input dimension mismatch");
    if (!x_unit.allFinite()) fail(ErrorCode::InvalidArgument, "posterior input must be finite");
    Eigen::VectorXd x = x_unit;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] >= 0.0 && x[i] <= 1.0) continue;
        if (x[i] < -1e-9 || x[i] > 1.0 + 1e-9)
            fail(ErrorCode::DomainError, "posterior input outside the normalized domain");
        std::clog << "warning: posterior input clamped into the unit cube\n";
        x[i] = std::clamp(x[i], 0.0, 1.0);
    }
    return model.predict(x);
}

FittedGP fit(const Dataset& data, const KernelFamily& kernel, const SearchConfig& search) {
    kernel.validate();
    const Eigen::Index n = data.size();
    const Eigen::Index d = data.dim();
    if (n < 2) fail(ErrorCode::InvalidArgument, "fitting needs at least two observations");
    if (search.starts_per_dim < 1 || search.evals_per_start < 1)
        fail(ErrorCode::InvalidArgument, "search budget must be positive");

    const Eigen::MatrixXd x = data.x_unit();
    const Eigen::VectorXd y = data.y();
    const Standardization stdz = Standardization::of(y);
    const Eigen::VectorXd ys = (y.array() - stdz.mean) / stdz.scale;
    const bool duplicates = has_duplicate_rows(x);
    const bool fit_power = kernel.kind == KernelKind::PowerExponential && search.estimate_shape;
    const bool fit_nu = kernel.kind == KernelKind::Matern && search.estimate_shape;
    const PairwiseCache cache(x, kernel.kind == KernelKind::PowerExponential);

    // Parameter layout: [omega_1..omega_d, tau, (p)]
    const Eigen::Index full = d + 1 + (fit_power ? 1 : 0);
    Eigen::VectorXd lower(full), upper(full);
    lower.head(d).setConstant(search.omega_lower);
    upper.head(d).setConstant(search.omega_upper);
    lower[d] = search.tau_lower;
    upper[d] = search.tau_upper;
    if (fit_power) {
        lower[d + 1] = search.power_lower;
        upper[d + 1] = 2.0;
    }
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < full; ++i)
        if (upper[i] > lower[i]) free.push_back(i);
    const auto nfree = static_cast<Eigen::Index>(free.size());

    auto expand = [&](const Eigen::VectorXd& z) {
        Eigen::VectorXd theta = lower;
        for (Eigen::Index i = 0; i < nfree; ++i) theta[free[i]] = z[i];
        return theta;
    };
    auto kernel_at = [&](const Eigen::VectorXd& theta, MaternNu nu) {
        KernelFamily k = kernel;
        if (fit_power) k.power = theta[d + 1];
        if (fit_nu) k.nu = nu;
        return k;
    };

    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::MatrixXd v;
    ProfileSolve solve;
    auto neg_loglik = [&](const Eigen::VectorXd& theta, MaternNu nu) {
        const double tau = theta[d];
        if (tau <= 0.0 && duplicates) return std::numeric_limits<double>::infinity();
        const KernelFamily k = kernel_at(theta, nu);
        const Eigen::VectorXd scales = lengthscale_weights(theta.head(d));
        for (double jitter : kJitterLadder) {
            cache.fill(k, scales, tau + jitter, v);
            llt.compute(v);
            if (llt.info() != Eigen::Success) continue;
            try {
                solve_profile(llt, ys, solve);
            } catch (const Error&) {
                return std::numeric_limits<double>::infinity();
            }
            return std::isfinite(solve.result.loglik) ? -solve.result.loglik : std::numeric_limits<double>::infinity();
        }
        return std::numeric_limits<double>::infinity();
    };

    const int starts = search.starts_per_dim * static_cast<int>(d + 1);
    Eigen::MatrixXd start_set = scrambled_halton(starts, static_cast<int>(std::max<Eigen::Index>(nfree, 1)), search.seed);
    Eigen::VectorXd lo_free(nfree), hi_free(nfree), step(nfree);
    for (Eigen::Index i = 0; i < nfree; ++i) {
        lo_free[i] = lower[free[i]];
        hi_free[i] = upper[free[i]];
        step[i] = 0.1 * (hi_free[i] - lo_free[i]);
    }

    double best_value = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta = lower;
    MaternNu best_nu = kernel.nu;
    for (int s = 0; s < starts; ++s) {
        MaternNu nu = fit_nu ? kNuLevels[s % 3] : kernel.nu;
        Eigen::VectorXd z0(nfree);
        for (Eigen::Index i = 0; i < nfree; ++i)
            z0[i] = lo_free[i] + start_set(s, i) * (hi_free[i] - lo_free[i]);
        auto objective = [&](const Eigen::VectorXd& z) { return neg_loglik(expand(z), nu); };
        NelderMeadResult res = nelder_mead(objective, z0, step, lo_free, hi_free, search.evals_per_start);
        if (res.value < best_value) {
            best_value = res.value;
            best_theta = expand(res.x);
            best_nu = nu;
        }
    }

    if (!std::isfinite(best_value)) {
        // Every start failed: surface the underlying error at the box centre.
        Eigen::VectorXd centre = 0.5 * (lower + upper);
        profile_loglik(data, kernel_at(centre, best_nu), centre.head(d), centre[d]);
        fail(ErrorCode::SingularCovariance, "no hyperparameter start produced a finite likelihood");
    }
    return FittedGP::condition(data, kernel_at(best_theta, best_nu), best_theta.head(d), best_theta[d]);
}

}  // namespace nbo::gp
