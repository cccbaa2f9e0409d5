#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>

#include "nbo/gp/dataset.hpp"
#include "nbo/gp/kernel.hpp"

namespace nbo::gp {

/// omega: log10 inverse lengthscales; tau: nugget relative to sigma2;
/// sigma2/beta: closed-form profile maximizers. sigma2, beta and tau are in
/// standardized response units.
struct Hyperparameters {
    Eigen::VectorXd omega;
    double tau = 0.0;
    double sigma2 = 1.0;
    Eigen::VectorXd beta;
};

struct ProfileLikelihood {
    double loglik = 0.0;
    double sigma2 = 0.0;
    Eigen::VectorXd beta;
};

/// Search box and multi-start budget for hyperparameter estimation.
struct SearchConfig {
    std::uint64_t seed = 0;
    double omega_lower = -10.0;
    double omega_upper = 10.0;
    double tau_lower = 0.0;
    double tau_upper = 1.0;
    double power_lower = 0.5;
    int starts_per_dim = 8;  // starts = starts_per_dim * (d + 1)
    int evals_per_start = 200;
    bool estimate_shape = true;  // fit p (PowerExponential) / nu (Matern)
};

struct PosteriorPrediction {
    double mean = 0.0;
    double variance = 0.0;
};

/// Response standardization applied on every refit.
struct Standardization {
    double mean = 0.0;
    double scale = 1.0;

    static Standardization of(const Eigen::VectorXd& y);
};

/// -n log(sigma2_hat) - log|V| with V = R_n + tau I, constant trend basis,
/// computed on standardized responses. Throws DegenerateData when
/// sigma2_hat < 1e-12 and SingularCovariance when V cannot be factored.
ProfileLikelihood profile_loglik(const Dataset& data, const KernelFamily& kernel,
                                 const Eigen::VectorXd& omega, double tau);

/// Trained emulator. Immutable; safe for concurrent read-only queries.
class FittedGP {
public:
    /// Conditions on `data` at fixed (omega, tau); sigma2 and beta take their
    /// closed-form values.
    static FittedGP condition(Dataset data, KernelFamily kernel, Eigen::VectorXd omega, double tau);

    const Dataset& dataset() const { return data_; }
    const KernelFamily& kernel() const { return kernel_; }
    const Hyperparameters& hyper() const { return hyper_; }
    const Standardization& standardization() const { return stdz_; }
    double loglik() const { return loglik_; }
    double jitter() const { return jitter_; }
    /// Lower-triangular factor of R_n + (tau + jitter) I.
    const Eigen::MatrixXd& factor() const { return chol_; }

    /// sigma2_hat in raw response units.
    double prior_variance() const { return hyper_.sigma2 * stdz_.scale * stdz_.scale; }
    /// sigma2_hat * tau_hat in raw response units.
    double noise_variance() const { return prior_variance() * hyper_.tau; }

    /// Predictive mean and variance (including noise) in raw units at a
    /// normalized input.
    PosteriorPrediction predict(const Eigen::VectorXd& x_unit) const;

    /// Row-wise predictions for an m x d matrix of normalized inputs.
    void predict_batch(const Eigen::MatrixXd& x_unit, Eigen::VectorXd& mean,
                       Eigen::VectorXd& variance) const;

    /// Posterior covariance of the latent response between two inputs (raw units).
    double latent_covariance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

    /// Latent posterior covariance matrix between rows of `a` and rows of `b`.
    Eigen::MatrixXd latent_covariance_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) const;

private:
    FittedGP() = default;

    // L^{-1} r(X, u) for each row u of `pts`.
    Eigen::MatrixXd whitened_cross(const Eigen::MatrixXd& pts) const;

    Dataset data_;
    KernelFamily kernel_;
    Hyperparameters hyper_;
    Standardization stdz_;
    Eigen::MatrixXd x_;
    Eigen::VectorXd scales_;
    Eigen::MatrixXd chol_;
    Eigen::MatrixXd whitened_basis_;        // L^{-1} M
    Eigen::VectorXd whitened_residual_;     // L^{-1} (y - M beta)
    Eigen::LLT<Eigen::MatrixXd> trend_llt_; // M^T V^{-1} M
    double loglik_ = 0.0;
    double jitter_ = 0.0;
};

/// Multi-start Nelder-Mead maximization of the profile likelihood.
/// Deterministic given `search.seed`.
FittedGP fit(const Dataset& data, const KernelFamily& kernel, const SearchConfig& search = {});

/// Validated single-point posterior: inputs outside the unit cube by less
/// than 1e-9 are clamped, larger excursions throw DomainError.
PosteriorPrediction posterior(const FittedGP& model, const Eigen::VectorXd& x_unit);

}  // namespace nbo::gp
