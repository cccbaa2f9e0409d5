#include "nbo/bo_loop.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <optional>

#include "nbo/design.hpp"
#include "nbo/error.hpp"
#include "nbo/rng.hpp"

namespace nbo::bo {

namespace {

// Stream tags for the per-run seed tree.
enum StreamTag : std::uint64_t { kDesign = 1, kNoise = 2, kFit = 1000, kAcq = 2000000 };

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

nlohmann::json vec_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::uint64_t fit_seed(std::uint64_t run_seed, Eigen::Index n) {
    return Rng::mix_seed(run_seed, kFit + static_cast<std::uint64_t>(n));
}

std::uint64_t acquisition_seed(std::uint64_t run_seed, Eigen::Index n) {
    return Rng::mix_seed(run_seed, kAcq + static_cast<std::uint64_t>(n));
}

std::string to_string(RecommendationRule rule) {
    return rule == RecommendationRule::PosteriorMean ? "posterior_mean" : "best_observed";
}

std::vector<int> standard_checkpoints(Eigen::Index d) {
    const int dd = static_cast<int>(d);
    return {25 * dd, static_cast<int>(std::floor(37.5 * dd + 0.5)), 50 * dd};
}

int RunConfig::total_budget(Eigen::Index d) const { return budget > 0 ? budget : 50 * static_cast<int>(d); }

std::vector<int> RunConfig::checkpoint_counts(Eigen::Index d) const {
    return checkpoints.empty() ? standard_checkpoints(d) : checkpoints;
}

int RunConfig::initial_budget(Eigen::Index d) const {
    return initial.samples_per_dim * static_cast<int>(d) * initial.replicates;
}

void RunConfig::validate() const {
    kernel.validate();
    acquisition.validate();
    if (!(noise_magnitude >= 0.0)) fail(ErrorCode::InvalidArgument, "noise magnitude must be >= 0");
    if (initial.samples_per_dim < 1) fail(ErrorCode::InvalidArgument, "initial samples must be positive");
    if (initial.replicates < 1 || initial.replicates > 3)
        fail(ErrorCode::InvalidArgument, "replicates must be 1, 2 or 3");
    const Eigen::Index d = testbed::make_problem(problem).dim();
    const int total = total_budget(d);
    if (initial_budget(d) < 2) fail(ErrorCode::InvalidArgument, "initial design needs at least two observations");
    if (total < initial_budget(d)) fail(ErrorCode::InvalidArgument, "budget is smaller than the initial design");
    for (int c : checkpoint_counts(d))
        if (c < 2 || c > total) fail(ErrorCode::InvalidArgument, "checkpoints must lie in [2, budget]");
}

Eigen::VectorXd recommend(const gp::FittedGP& model) {
    const Eigen::MatrixXd x = model.dataset().x_unit();
    Eigen::VectorXd mean, var;
    model.predict_batch(x, mean, var);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < x.rows(); ++i) {
        if (mean[i] < mean[best] ||
            (mean[i] == mean[best] && lex_less(x.row(i).transpose(), x.row(best).transpose())))
            best = i;
    }
    return x.row(best).transpose();
}

Eigen::VectorXd best_observed(const gp::Dataset& data) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < data.size(); ++i) {
        if (data.y_at(i) < data.y_at(best) ||
            (data.y_at(i) == data.y_at(best) && lex_less(data.row_unit(i), data.row_unit(best))))
            best = i;
    }
    return data.row_unit(best);
}

Eigen::VectorXd recommend(const gp::FittedGP& model, RecommendationRule rule) {
    return rule == RecommendationRule::PosteriorMean ? recommend(model) : best_observed(model.dataset());
}

double gap(const testbed::ProblemInstance& problem, const Eigen::VectorXd& recommendation) {
    return testbed::eval_true(problem, recommendation) - problem.f_min;
}

Eigen::VectorXd max_variance_point(const gp::FittedGP& model) {
    auto m = acq::maximize(
        [&](const Eigen::MatrixXd& pts) {
            Eigen::VectorXd mean, var;
            model.predict_batch(pts, mean, var);
            return var;
        },
        model.dataset().dim());
    return m.x;
}

Trace run_bo(const RunConfig& config) {
    config.validate();
    const testbed::ProblemInstance problem = testbed::make_problem(config.problem);
    const Eigen::Index d = problem.dim();
    testbed::NoiseModel noise;
    if (config.noise_magnitude > 0.0)
        noise = testbed::calibrate_noise(problem, config.noise_form, config.noise_magnitude);
    else
        noise.constant_sd = 0.0;

    const int budget = config.total_budget(d);
    const std::vector<int> checkpoints = config.checkpoint_counts(d);

    Trace trace;
    trace.config_hash = config_hash(config);
    trace.rule = config.rule;

    Rng design_rng(Rng::mix_seed(config.seed, kDesign));
    Rng noise_rng(Rng::mix_seed(config.seed, kNoise));
    const Eigen::MatrixXd initial = design::expand_replicates(
        design::lhs_maximin(config.initial.samples_per_dim * d, d, design_rng, config.initial.restarts),
        config.initial.replicates);

    gp::Dataset data(problem.domain);
    auto fit_at = [&](const gp::Dataset& ds) {
        gp::SearchConfig search = config.search;
        search.seed = fit_seed(config.seed, ds.size());
        gp::FittedGP model = gp::fit(ds, config.kernel, search);
        ++trace.diagnostics.fits;
        if (model.jitter() > 0.0) ++trace.diagnostics.jitter_events;
        trace.diagnostics.loglik.push_back(model.loglik());
        return model;
    };

    auto observe = [&](const Eigen::VectorXd& x_unit, bool is_initial, bool fallback) {
        Eigen::VectorXd x = problem.domain.from_unit(x_unit);
        double y = testbed::sample_observation(problem, noise, x, noise_rng);
        data.add_unit(x_unit, y);
        trace.records.push_back({static_cast<int>(data.size()), x, y, is_initial, fallback});
    };

    auto is_checkpoint = [&](int t) {
        return std::find(checkpoints.begin(), checkpoints.end(), t) != checkpoints.end();
    };
    auto record_checkpoint = [&](const gp::FittedGP& model) {
        Eigen::VectorXd rec = problem.domain.from_unit(recommend(model, config.rule));
        trace.checkpoints.push_back({static_cast<int>(model.dataset().size()), rec, gap(problem, rec)});
    };

    try {
        std::optional<gp::FittedGP> model;
        for (Eigen::Index i = 0; i < initial.rows() && static_cast<int>(data.size()) < budget; ++i) {
            observe(initial.row(i).transpose(), true, false);
            if (is_checkpoint(static_cast<int>(data.size()))) {
                model.emplace(fit_at(data));
                record_checkpoint(*model);
            }
        }
        while (static_cast<int>(data.size()) < budget) {
            if (!model || model->dataset().size() != data.size()) model.emplace(fit_at(data));
            acq::AcquisitionSpec spec = config.acquisition;
            spec.seed = acquisition_seed(config.seed, data.size());
            Eigen::VectorXd next;
            bool fallback = false;
            try {
                next = acq::maximize_acquisition(*model, spec).x;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::AcquisitionFailure) throw;
                next = max_variance_point(*model);
                fallback = true;
                ++trace.diagnostics.acquisition_fallbacks;
            }
            observe(next, false, fallback);
            if (is_checkpoint(static_cast<int>(data.size()))) {
                model.emplace(fit_at(data));
                record_checkpoint(*model);
            }
        }
    } catch (const Error& e) {
        trace.failed = true;
        trace.failure = std::string(to_string(e.code())) + ": " + e.what();
    }
    return trace;
}

nlohmann::json to_json(const RunConfig& c) {
    return {
        {"problem", testbed::to_string(c.problem)},
        {"noise_form", testbed::to_string(c.noise_form)},
        {"noise_magnitude", c.noise_magnitude},
        {"kernel",
         {{"family", gp::to_string(c.kernel.kind)},
          {"power", c.kernel.power},
          {"nu", gp::nu_value(c.kernel.nu)}}},
        {"acquisition",
         {{"kind", acq::to_string(c.acquisition.kind)},
          {"pi", c.acquisition.pi},
          {"lambda", c.acquisition.lambda},
          {"kg_expectation", acq::to_string(c.acquisition.kg_expectation)},
          {"kg_quadrature", c.acquisition.kg_quadrature},
          {"pes_star_samples", c.acquisition.pes_star_samples},
          {"candidate_grid", c.acquisition.candidate_grid},
          {"ei_noise", c.acquisition.ei_noise == acq::EiNoiseFactor::Literal ? "literal" : "variance_ratio"}}},
        {"initial",
         {{"samples_per_dim", c.initial.samples_per_dim},
          {"replicates", c.initial.replicates},
          {"restarts", c.initial.restarts}}},
        {"budget", c.budget},
        {"checkpoints", c.checkpoints},
        {"recommendation", to_string(c.rule)},
        {"search",
         {{"starts_per_dim", c.search.starts_per_dim},
          {"evals_per_start", c.search.evals_per_start},
          {"tau_upper", c.search.tau_upper},
          {"estimate_shape", c.search.estimate_shape}}},
        {"seed", c.seed},
    };
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.problem = testbed::problem_from_string(j.value("problem", "f1"));
    c.noise_form = testbed::noise_form_from_string(j.value("noise_form", "Constant"));
    c.noise_magnitude = j.value("noise_magnitude", c.noise_magnitude);
    if (j.contains("kernel")) {
        const auto& k = j["kernel"];
        c.kernel.kind = gp::kernel_kind_from_string(k.value("family", "Matern"));
        c.kernel.power = k.value("power", 2.0);
        double nu = k.value("nu", 2.5);
        c.kernel.nu = nu < 1.0 ? gp::MaternNu::OneHalf : nu < 2.0 ? gp::MaternNu::ThreeHalves : gp::MaternNu::FiveHalves;
    }
    if (j.contains("acquisition")) {
        const auto& a = j["acquisition"];
        c.acquisition.kind = acq::acquisition_kind_from_string(a.value("kind", "EI"));
        c.acquisition.pi = a.value("pi", c.acquisition.pi);
        c.acquisition.lambda = a.value("lambda", c.acquisition.lambda);
        c.acquisition.kg_expectation = acq::kg_expectation_from_string(a.value("kg_expectation", std::string("exact")));
        c.acquisition.kg_quadrature = a.value("kg_quadrature", c.acquisition.kg_quadrature);
        c.acquisition.pes_star_samples = a.value("pes_star_samples", c.acquisition.pes_star_samples);
        c.acquisition.candidate_grid = a.value("candidate_grid", c.acquisition.candidate_grid);
        c.acquisition.ei_noise = a.value("ei_noise", std::string("variance_ratio")) == "literal"
                                     ? acq::EiNoiseFactor::Literal
                                     : acq::EiNoiseFactor::VarianceRatio;
    }
    if (j.contains("initial")) {
        const auto& i = j["initial"];
        c.initial.samples_per_dim = i.value("samples_per_dim", c.initial.samples_per_dim);
        c.initial.replicates = i.value("replicates", c.initial.replicates);
        c.initial.restarts = i.value("restarts", c.initial.restarts);
    }
    c.budget = j.value("budget", 0);
    c.checkpoints = j.value("checkpoints", std::vector<int>{});
    c.rule = j.value("recommendation", std::string("posterior_mean")) == "best_observed"
                 ? RecommendationRule::BestObserved
                 : RecommendationRule::PosteriorMean;
    if (j.contains("search")) {
        const auto& s = j["search"];
        c.search.starts_per_dim = s.value("starts_per_dim", c.search.starts_per_dim);
        c.search.evals_per_start = s.value("evals_per_start", c.search.evals_per_start);
        c.search.tau_upper = s.value("tau_upper", c.search.tau_upper);
        c.search.estimate_shape = s.value("estimate_shape", c.search.estimate_shape);
    }
    c.seed = j.value("seed", std::uint64_t{0});
    return c;
}

std::string config_hash(const RunConfig& config) { return hex64(fnv1a64(to_json(config).dump())); }

nlohmann::json to_json(const Trace& trace) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : trace.records)
        records.push_back({{"t", r.t}, {"x", vec_json(r.x)}, {"y", r.y}, {"initial", r.initial}, {"fallback", r.fallback}});
    nlohmann::json checkpoints = nlohmann::json::array();
    for (const auto& c : trace.checkpoints)
        checkpoints.push_back({{"observations", c.observations}, {"recommendation", vec_json(c.recommendation)}, {"gap", c.gap}});
    return {
        {"schema_version", 1},
        {"config_hash", trace.config_hash},
        {"recommendation_rule", to_string(trace.rule)},
        {"records", records},
        {"checkpoints", checkpoints},
        {"diagnostics",
         {{"fits", trace.diagnostics.fits},
          {"jitter_events", trace.diagnostics.jitter_events},
          {"acquisition_fallbacks", trace.diagnostics.acquisition_fallbacks},
          {"loglik", trace.diagnostics.loglik}}},
        {"failed", trace.failed},
        {"failure", trace.failure},
    };
}

}  // namespace nbo::bo
