#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>

#include "nbo/gp/gp.hpp"

namespace nbo::acq {

enum class AcquisitionKind { UC, PI, EI, KG, PES };

/// How the noisy-EI penalty is formed. VarianceRatio uses
/// 1 - sigma2*tau / s^2(x) clamped to [0, 1]; Literal divides by s(x) and is
/// kept for sensitivity studies.
enum class EiNoiseFactor { VarianceRatio, Literal };

/// How KG takes the expectation over the hallucinated observation. Exact
/// integrates the lower envelope of the updated means in closed form;
/// GaussHermite uses `kg_quadrature` nodes.
enum class KgExpectation { Exact, GaussHermite };

std::string to_string(AcquisitionKind kind);
AcquisitionKind acquisition_kind_from_string(const std::string& name);
std::string to_string(KgExpectation method);
KgExpectation kg_expectation_from_string(const std::string& name);

struct AcquisitionSpec {
    AcquisitionKind kind = AcquisitionKind::EI;
    double pi = 5.0;       // UC exploration weight
    double lambda = 0.1;   // PI target offset
    KgExpectation kg_expectation = KgExpectation::Exact;
    int kg_quadrature = 20;  // nodes when kg_expectation is GaussHermite
    int pes_star_samples = 32;
    int candidate_grid = 0;  // per-dimension resolution of the KG/PES grid; 0 = default
    EiNoiseFactor ei_noise = EiNoiseFactor::VarianceRatio;
    std::uint64_t seed = 0;  // PES Thompson draws

    void validate() const;
};

/// y* = min(Y), y_max = max(Y), y_target = y* - lambda (y_max - y*).
struct Incumbent {
    double y_star = 0.0;
    double y_max = 0.0;
    double y_target = 0.0;

    static Incumbent from(const Eigen::VectorXd& y, double lambda);
};

// Closed forms on a (mean, variance) pair, raw units.
double uc_value(double mean, double variance, double pi);
double pi_value(double mean, double variance, double target);
double classic_ei(double mean, double variance, double y_star);
double ei_noise_factor(double variance, double noise_variance, EiNoiseFactor form);

double alpha_uc(const gp::FittedGP& model, const Eigen::VectorXd& x, double pi);
double alpha_pi(const gp::FittedGP& model, const Eigen::VectorXd& x, const Incumbent& incumbent);
double alpha_ei(const gp::FittedGP& model, const Eigen::VectorXd& x, const Incumbent& incumbent,
                EiNoiseFactor form = EiNoiseFactor::VarianceRatio);
double alpha_kg(const gp::FittedGP& model, const Eigen::VectorXd& x, const AcquisitionSpec& spec);
double alpha_pes(const gp::FittedGP& model, const Eigen::VectorXd& x, const AcquisitionSpec& spec);

/// E[min_i (a_i + b_i Z)] for standard normal Z, exact. Lines equal in
/// slope keep the smallest intercept. Sizes must match and be non-zero.
double expected_min_of_lines(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Regular grid over [0,1]^d with `per_dim` points per axis, rows in
/// lexicographic order (first coordinate slowest).
Eigen::MatrixXd unit_grid(Eigen::Index d, int per_dim);

/// Scan resolution per axis: 1001 for d=1, 101 for d=2, coarser beyond.
int scan_resolution(Eigen::Index d);
/// Default KG/PES candidate resolution per axis.
int candidate_resolution(Eigen::Index d);

/// Acquisition bound to one fitted model. Precomputes the incumbent, the
/// candidate grid and (for PES) the Thompson draws, so repeated evaluation
/// is a pure function of x.
class Acquisition {
public:
    Acquisition(const gp::FittedGP& model, AcquisitionSpec spec);

    double operator()(const Eigen::VectorXd& x) const;
    Eigen::VectorXd evaluate(const Eigen::MatrixXd& pts) const;

    const AcquisitionSpec& spec() const { return spec_; }
    const Incumbent& incumbent() const { return incumbent_; }
    /// Grid indices of the sampled minimizers (PES only).
    const std::vector<Eigen::Index>& star_indices() const { return star_index_; }
    const Eigen::MatrixXd& candidates() const { return candidates_; }

private:
    Eigen::VectorXd evaluate_kg(const Eigen::MatrixXd& pts, const Eigen::VectorXd& mean,
                                const Eigen::VectorXd& var) const;
    Eigen::VectorXd evaluate_pes(const Eigen::MatrixXd& pts, const Eigen::VectorXd& var) const;

    const gp::FittedGP& model_;
    AcquisitionSpec spec_;
    Incumbent incumbent_;
    Eigen::MatrixXd candidates_;
    Eigen::VectorXd candidate_mean_;
    std::vector<double> nodes_, weights_;
    Eigen::MatrixXd stars_;
    Eigen::VectorXd star_variance_;
    std::vector<Eigen::Index> star_index_;
};

struct Maximum {
    Eigen::VectorXd x;      // normalized coordinates
    double value = 0.0;
    double grid_value = 0.0;  // best value on the scan grid
};

using BatchAcquisition = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Dense-grid scan followed by a compass pattern search from the best grid
/// point. Ties resolve to the lexicographically smallest grid point.
/// Throws AcquisitionFailure when no scan value is finite.
Maximum maximize(const BatchAcquisition& alpha, Eigen::Index d, int resolution = 0);

Maximum maximize_acquisition(const gp::FittedGP& model, const AcquisitionSpec& spec);

}  // namespace nbo::acq
