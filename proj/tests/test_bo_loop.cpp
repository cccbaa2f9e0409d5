#include <doctest.h>

#include <cmath>

#include "nbo/bo_loop.hpp"
#include "nbo/error.hpp"

using namespace nbo;

namespace {

bo::RunConfig short_config(std::uint64_t seed) {
    bo::RunConfig c;
    c.problem = testbed::ProblemId::F1;
    c.noise_form = testbed::NoiseForm::Good;
    c.noise_magnitude = 0.05;
    c.acquisition.kind = acq::AcquisitionKind::EI;
    c.initial.samples_per_dim = 4;
    c.initial.replicates = 1;
    c.budget = 14;
    c.checkpoints = {6, 10, 14};
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("noiseless f1 is essentially solved within 50 observations") {
    bo::RunConfig c;
    c.problem = testbed::ProblemId::F1;
    c.noise_magnitude = 0.0;
    c.kernel = gp::KernelFamily::matern(gp::MaternNu::FiveHalves);
    c.acquisition.kind = acq::AcquisitionKind::EI;
    c.seed = 7;
    auto trace = bo::run_bo(c);
    REQUIRE_FALSE(trace.failed);
    auto p = testbed::make_problem(testbed::ProblemId::F1);
    REQUIRE(trace.checkpoints.size() == 3);
    CHECK(trace.checkpoints.back().observations == 50);
    CHECK(trace.checkpoints.back().gap <= 0.01 * p.delta_f());
    CHECK(trace.records.size() == 50);
}

TEST_CASE("checkpoints sit at 25d, 37.5d rounded up, and 50d") {
    CHECK(bo::standard_checkpoints(1) == std::vector<int>{25, 38, 50});
    CHECK(bo::standard_checkpoints(2) == std::vector<int>{50, 75, 100});
}

TEST_CASE("trace length equals budget and records are ordered") {
    auto trace = bo::run_bo(short_config(3));
    REQUIRE_FALSE(trace.failed);
    REQUIRE(trace.records.size() == 14);
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        CHECK(trace.records[i].t == static_cast<int>(i + 1));
        CHECK(trace.records[i].initial == (i < 4));
    }
    REQUIRE(trace.checkpoints.size() == 3);
    CHECK(trace.checkpoints[0].observations == 6);
    CHECK(trace.checkpoints[1].observations == 10);
    CHECK(trace.checkpoints[2].observations == 14);
    for (const auto& cp : trace.checkpoints) CHECK(cp.gap >= -1e-9);
    CHECK(trace.diagnostics.loglik.size() == static_cast<std::size_t>(trace.diagnostics.fits));
}

TEST_CASE("same config and seed give byte-identical traces") {
    const auto a = bo::to_json(bo::run_bo(short_config(11))).dump();
    const auto b = bo::to_json(bo::run_bo(short_config(11))).dump();
    const auto c = bo::to_json(bo::run_bo(short_config(12))).dump();
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("budget equal to the initial design samples nothing adaptively") {
    auto c = short_config(5);
    c.initial.samples_per_dim = 3;
    c.initial.replicates = 2;
    c.budget = 6;
    c.checkpoints = {6};
    auto trace = bo::run_bo(c);
    REQUIRE_FALSE(trace.failed);
    REQUIRE(trace.records.size() == 6);
    for (const auto& r : trace.records) CHECK(r.initial);
    REQUIRE(trace.checkpoints.size() == 1);
    // Recommendation is one of the initial inputs.
    bool found = false;
    for (const auto& r : trace.records) found = found || (r.x - trace.checkpoints[0].recommendation).norm() == 0.0;
    CHECK(found);
}

TEST_CASE("invalid configs are rejected") {
    auto c = short_config(1);
    c.budget = 3;
    CHECK_THROWS_AS(bo::run_bo(c), Error);
    c = short_config(1);
    c.checkpoints = {20};
    CHECK_THROWS_AS(bo::run_bo(c), Error);
    c = short_config(1);
    c.initial.replicates = 4;
    CHECK_THROWS_AS(bo::run_bo(c), Error);
}

TEST_CASE("run config survives a JSON round trip") {
    auto c = short_config(99);
    c.kernel = gp::KernelFamily::power_exponential(1.5);
    c.acquisition.kind = acq::AcquisitionKind::KG;
    auto back = bo::run_config_from_json(bo::to_json(c));
    CHECK(bo::to_json(back) == bo::to_json(c));
    CHECK(bo::config_hash(back) == bo::config_hash(c));
}

TEST_CASE("recommend with a single observed location returns it") {
    // One response alone has zero sample variance, so the location is
    // replicated to make the model well defined.
    gp::Dataset ds(gp::Box::unit(1));
    ds.add_unit(Eigen::VectorXd::Constant(1, 0.3), 2.0);
    ds.add_unit(Eigen::VectorXd::Constant(1, 0.3), 2.5);
    auto model = gp::FittedGP::condition(ds, gp::KernelFamily::squared_exponential(), Eigen::VectorXd::Zero(1), 0.1);
    CHECK(bo::recommend(model)[0] == 0.3);
}

TEST_CASE("interpolating model recommends the smallest observed response") {
    gp::Dataset ds(gp::Box::unit(1));
    const double xs[] = {0.05, 0.2, 0.45, 0.6, 0.8, 0.95};
    const double ys[] = {1.0, -0.4, 0.7, -1.3, 0.2, 0.9};
    for (int i = 0; i < 6; ++i) ds.add_unit(Eigen::VectorXd::Constant(1, xs[i]), ys[i]);
    auto model = gp::FittedGP::condition(ds, gp::KernelFamily::matern(gp::MaternNu::FiveHalves),
                                         Eigen::VectorXd::Constant(1, 1.0), 0.0);
    CHECK(bo::recommend(model)[0] == 0.6);
    CHECK(bo::best_observed(ds)[0] == 0.6);
}

TEST_CASE("high noise: recommendation follows the posterior mean, not the noisy minimum") {
    // Smooth bowl with one strongly negative outlier far from its minimum.
    gp::Dataset ds(gp::Box::unit(1));
    for (int i = 0; i <= 10; ++i) {
        const double x = i / 10.0;
        double y = (x - 0.5) * (x - 0.5);
        if (i == 9) y -= 0.5;
        ds.add_unit(Eigen::VectorXd::Constant(1, x), y);
    }
    auto model = gp::FittedGP::condition(ds, gp::KernelFamily::squared_exponential(), Eigen::VectorXd::Constant(1, 0.3), 2.0);
    // Brute-force scan of the posterior at every observed input.
    double best_mu = INFINITY;
    double best_x = -1;
    for (int i = 0; i <= 10; ++i) {
        const double mu = gp::posterior(model, Eigen::VectorXd::Constant(1, i / 10.0)).mean;
        if (mu < best_mu) best_mu = mu, best_x = i / 10.0;
    }
    CHECK(bo::best_observed(ds)[0] == doctest::Approx(0.9));
    CHECK(bo::recommend(model)[0] == best_x);
    CHECK(best_x != doctest::Approx(0.9));
    CHECK(bo::recommend(model, bo::RecommendationRule::BestObserved)[0] == doctest::Approx(0.9));
}

TEST_CASE("gap values") {
    auto p1 = testbed::make_problem(testbed::ProblemId::F1);
    CHECK(std::abs(bo::gap(p1, p1.x_min)) <= 1e-12);
    auto p3 = testbed::make_problem(testbed::ProblemId::F3);
    CHECK(bo::gap(p3, Eigen::VectorXd::Zero(2)) == doctest::Approx(1.0316).epsilon(1e-4));
    // Difference form: shifting both the value and the minimum cancels.
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.4);
    for (double c : {-3.0, 0.5, 100.0})
        CHECK(std::abs((testbed::eval_true(p1, x) + c) - (p1.f_min + c) - bo::gap(p1, x)) <= 1e-12);
}

TEST_CASE("stream seeds differ by data size and run seed") {
    CHECK(bo::fit_seed(1, 10) != bo::fit_seed(1, 11));
    CHECK(bo::fit_seed(1, 10) != bo::fit_seed(2, 10));
    CHECK(bo::fit_seed(1, 10) != bo::acquisition_seed(1, 10));
}
