#pragma once

#include <Eigen/Core>
#include <vector>

namespace nbo::gp {

/// Axis-aligned box; inputs are mapped affinely onto the unit cube.
struct Box {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    static Box unit(Eigen::Index d);

    Eigen::Index dim() const { return lower.size(); }
    Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const;
    Eigen::VectorXd from_unit(const Eigen::VectorXd& u) const;
    bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
    void validate() const;
};

/// Observations in normalized input coordinates. Responses stay in raw
/// units; the fit standardizes them (mean 0, sd 1) on every refit.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(Box domain);

    /// Raw-coordinate constructor: rows of `x` lie in `domain`.
    static Dataset from_raw(Box domain, const Eigen::MatrixXd& x, const Eigen::VectorXd& y);
    /// Inputs already in [0, 1]^d.
    static Dataset from_unit(Box domain, const Eigen::MatrixXd& x_unit, const Eigen::VectorXd& y);

    void add_raw(const Eigen::VectorXd& x, double y);
    void add_unit(const Eigen::VectorXd& u, double y);

    const Box& domain() const { return domain_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(y_.size()); }
    Eigen::Index dim() const { return domain_.dim(); }

    Eigen::MatrixXd x_unit() const;
    Eigen::VectorXd y() const;
    Eigen::VectorXd row_unit(Eigen::Index i) const;
    double y_at(Eigen::Index i) const { return y_[static_cast<std::size_t>(i)]; }

    /// First `n` observations, in insertion order.
    Dataset head(Eigen::Index n) const;

private:
    Box domain_;
    std::vector<Eigen::VectorXd> x_;
    std::vector<double> y_;
};

}  // namespace nbo::gp
