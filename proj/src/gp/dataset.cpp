#include "nbo/gp/dataset.hpp"

#include <cmath>

#include "nbo/error.hpp"

namespace nbo::gp {

Box Box::unit(Eigen::Index d) {
    return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d)};
}

Eigen::VectorXd Box::to_unit(const Eigen::VectorXd& x) const {
    return ((x - lower).array() / (upper - lower).array()).matrix();
}

Eigen::VectorXd Box::from_unit(const Eigen::VectorXd& u) const {
    return (lower.array() + u.array() * (upper - lower).array()).matrix();
}

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
    if (x.size() != dim()) return false;
    for (Eigen::Index i = 0; i < dim(); ++i) {
        if (!std::isfinite(x[i])) return false;
        double slack = tol * (upper[i] - lower[i]);
        if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
    }
    return true;
}

void Box::validate() const {
    if (lower.size() == 0 || lower.size() != upper.size())
        fail(ErrorCode::InvalidArgument, "box bounds must be non-empty and of equal length");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i]))
            fail(ErrorCode::InvalidArgument, "box bounds must be finite with lower < upper");
}

Dataset::Dataset(Box domain) : domain_(std::move(domain)) { domain_.validate(); }

Dataset Dataset::from_raw(Box domain, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) fail(ErrorCode::InvalidArgument, "X and Y row counts differ");
    Dataset ds(std::move(domain));
    for (Eigen::Index i = 0; i < x.rows(); ++i) ds.add_raw(x.row(i).transpose(), y[i]);
    return ds;
}

Dataset Dataset::from_unit(Box domain, const Eigen::MatrixXd& x_unit, const Eigen::VectorXd& y) {
    if (x_unit.rows() != y.size()) fail(ErrorCode::InvalidArgument, "X and Y row counts differ");
    Dataset ds(std::move(domain));
    for (Eigen::Index i = 0; i < x_unit.rows(); ++i) ds.add_unit(x_unit.row(i).transpose(), y[i]);
    return ds;
}

void Dataset::add_raw(const Eigen::VectorXd& x, double y) {
    if (!domain_.contains(x, 1e-12)) fail(ErrorCode::DomainError, "observation outside the domain");
    Eigen::VectorXd u = domain_.to_unit(x).cwiseMax(0.0).cwiseMin(1.0);
    add_unit(u, y);
}

void Dataset::add_unit(const Eigen::VectorXd& u, double y) {
    if (u.size() != dim()) fail(ErrorCode::InvalidArgument, "observation dimension mismatch");
    if (!u.allFinite() || !std::isfinite(y))
        fail(ErrorCode::InvalidArgument, "observations must be finite");
    if ((u.array() < 0.0).any() || (u.array() > 1.0).any())
        fail(ErrorCode::DomainError, "normalized input outside [0, 1]");
    x_.push_back(u);
    y_.push_back(y);
}

Eigen::MatrixXd Dataset::x_unit() const {
    Eigen::MatrixXd x(size(), dim());
    for (Eigen::Index i = 0; i < size(); ++i) x.row(i) = x_[static_cast<std::size_t>(i)].transpose();
    return x;
}

Eigen::VectorXd Dataset::y() const {
    return Eigen::Map<const Eigen::VectorXd>(y_.data(), size());
}

Eigen::VectorXd Dataset::row_unit(Eigen::Index i) const { return x_[static_cast<std::size_t>(i)]; }

Dataset Dataset::head(Eigen::Index n) const {
    Dataset out(domain_);
    for (Eigen::Index i = 0; i < std::min(n, size()); ++i) {
        out.x_.push_back(x_[static_cast<std::size_t>(i)]);
        out.y_.push_back(y_[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace nbo::gp
