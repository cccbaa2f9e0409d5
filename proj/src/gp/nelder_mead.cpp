#include "nbo/gp/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace nbo::gp {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& start, const Eigen::VectorXd& step,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             int max_evals, double ftol, double xtol) {
    const Eigen::Index k = start.size();
    auto project = [&](Eigen::VectorXd v) { return v.cwiseMax(lower).cwiseMin(upper).eval(); };

    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& v) {
        ++evals;
        double f = objective(v);
        return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
    };

    std::vector<Eigen::VectorXd> simplex;
    std::vector<double> values;
    simplex.push_back(project(start));
    values.push_back(eval(simplex[0]));
    for (Eigen::Index i = 0; i < k; ++i) {
        Eigen::VectorXd v = simplex[0];
        v[i] += step[i];
        if (v[i] > upper[i]) v[i] = simplex[0][i] - step[i];
        simplex.push_back(project(v));
        values.push_back(eval(simplex.back()));
    }

    std::vector<std::size_t> order(simplex.size());
    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[order.size() - 2];

        double fspread = values[worst] - values[best];
        double xspread = 0.0;
        for (const auto& v : simplex) xspread = std::max(xspread, (v - simplex[best]).cwiseAbs().maxCoeff());
        if (std::isfinite(fspread) && fspread <= ftol && xspread <= xtol) break;
        if (k == 0) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
        for (std::size_t i = 0; i < simplex.size(); ++i)
            if (i != worst) centroid += simplex[i];
        centroid /= static_cast<double>(k);

        Eigen::VectorXd reflected = project(centroid + (centroid - simplex[worst]));
        double fr = eval(reflected);
        if (fr < values[best]) {
            Eigen::VectorXd expanded = project(centroid + 2.0 * (centroid - simplex[worst]));
            double fe = eval(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        bool outside = fr < values[worst];
        Eigen::VectorXd contracted = outside ? project(centroid + 0.5 * (reflected - centroid))
                                             : project(centroid + 0.5 * (simplex[worst] - centroid));
        double fc = eval(contracted);
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i < simplex.size(); ++i) {
            if (i == best) continue;
            simplex[i] = project(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
            values[i] = eval(simplex[i]);
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < simplex.size(); ++i)
        if (values[i] < values[best]) best = i;
    return {simplex[best], values[best], evals};
}

}  // namespace nbo::gp
