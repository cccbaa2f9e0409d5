#include <doctest.h>

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <vector>

#include "nbo/acquisition.hpp"
#include "nbo/design.hpp"
#include "nbo/error.hpp"
#include "nbo/gp/gp.hpp"
#include "nbo/rng.hpp"
#include "oracles/dense_gp.hpp"

using namespace nbo;
using namespace nbo::gp;

namespace {

oracle::Family family_of(const KernelFamily& k) {
    switch (k.kind) {
        case KernelKind::SquaredExponential: return oracle::Family::SE;
        case KernelKind::PowerExponential: return oracle::Family::Pow;
        case KernelKind::Matern:
            return k.nu == MaternNu::OneHalf ? oracle::Family::Matern12
                 : k.nu == MaternNu::ThreeHalves ? oracle::Family::Matern32
                                                 : oracle::Family::Matern52;
    }
    return oracle::Family::SE;
}

oracle::DenseGP dense_of(const FittedGP& m) {
    return {family_of(m.kernel()), m.hyper().omega, m.hyper().tau, m.kernel().power, m.dataset().x_unit(),
            m.dataset().y()};
}

Dataset noisy_sine_data(int n, int d, Rng& rng) {
    Dataset ds(Box::unit(d));
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd u(d);
        for (int j = 0; j < d; ++j) u[j] = rng.uniform();
        ds.add_unit(u, std::sin(6 * u.sum()) + 0.3 * rng.normal());
    }
    return ds;
}

Eigen::VectorXd v1(double a) { return Eigen::VectorXd::Constant(1, a); }

}  // namespace

TEST_CASE("dataset normalization round trip") {
    Box box{Eigen::Vector2d(-2, 3), Eigen::Vector2d(5, 4.5)};
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        Eigen::Vector2d x(-2 + 7 * rng.uniform(), 3 + 1.5 * rng.uniform());
        CHECK((box.from_unit(box.to_unit(x)) - x).cwiseAbs().maxCoeff() <= 1e-12);
    }
    Dataset ds(Box::unit(1));
    CHECK_THROWS_AS(ds.add_unit(v1(1.5), 0.0), Error);
    CHECK_THROWS_AS((Box{Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 1)}).validate(), Error);
}

TEST_CASE("profile likelihood on a two-point set matches the dense oracle") {
    Dataset ds(Box::unit(1));
    ds.add_unit(v1(0.2), 1.3);
    ds.add_unit(v1(0.7), -0.4);
    for (const auto& k : {KernelFamily::squared_exponential(), KernelFamily::matern(MaternNu::FiveHalves)}) {
        ProfileLikelihood pl = profile_loglik(ds, k, v1(0.0), 0.1);
        oracle::DenseGP ref(family_of(k), v1(0.0), 0.1, 2.0, ds.x_unit(), ds.y());
        CHECK(oracle::rel_err(pl.loglik, ref.loglik) <= 1e-10);
        CHECK(oracle::rel_err(pl.sigma2, ref.sigma2) <= 1e-10);
        CHECK(std::fabs(pl.beta[0] - ref.beta) <= 1e-10);
    }
}

TEST_CASE("profile likelihood error contracts") {
    Dataset flat(Box::unit(1));
    flat.add_unit(v1(0.1), 2.0);
    flat.add_unit(v1(0.5), 2.0);
    flat.add_unit(v1(0.9), 2.0);
    try {
        profile_loglik(flat, KernelFamily::squared_exponential(), v1(0.0), 0.0);
        FAIL("expected degenerate data");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateData);
    }

    Dataset dup(Box::unit(1));
    dup.add_unit(v1(0.4), 1.0);
    dup.add_unit(v1(0.4), 2.0);
    dup.add_unit(v1(0.8), 0.0);
    try {
        profile_loglik(dup, KernelFamily::squared_exponential(), v1(0.0), 0.0);
        FAIL("expected singular covariance");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularCovariance);
    }
    CHECK_NOTHROW(profile_loglik(dup, KernelFamily::squared_exponential(), v1(0.0), 0.1));

    Dataset one(Box::unit(1));
    one.add_unit(v1(0.4), 1.0);
    CHECK_THROWS_AS(profile_loglik(one, KernelFamily::squared_exponential(), v1(0.0), 0.1), Error);
    CHECK_THROWS_AS(fit(one, KernelFamily::squared_exponential()), Error);
}

TEST_CASE("posterior matches the dense oracle on random models") {
    Rng rng(101);
    const KernelFamily families[] = {KernelFamily::squared_exponential(), KernelFamily::power_exponential(1.4),
                                     KernelFamily::matern(MaternNu::ThreeHalves)};
    for (int m = 0; m < 12; ++m) {
        const int d = 1 + m % 2;
        Dataset ds = noisy_sine_data(5 + 7 * m, d, rng);
        Eigen::VectorXd omega(d);
        for (int j = 0; j < d; ++j) omega[j] = -1 + 2 * rng.uniform();
        const double tau = 0.01 + 0.3 * rng.uniform();
        const KernelFamily k = families[m % 3];
        FittedGP model = FittedGP::condition(ds, k, omega, tau);
        oracle::DenseGP ref = dense_of(model);
        CHECK(oracle::rel_err(model.loglik(), ref.loglik) <= 1e-8);
        CHECK(oracle::rel_err(model.hyper().sigma2, ref.sigma2) <= 1e-10);
        for (int t = 0; t < 10; ++t) {
            Eigen::VectorXd u(d);
            for (int j = 0; j < d; ++j) u[j] = rng.uniform();
            PosteriorPrediction p = posterior(model, u);
            CHECK(oracle::rel_err(p.mean, ref.mean(u)) <= 1e-8);
            CHECK(oracle::rel_err(p.variance, ref.variance(u)) <= 1e-8);
            Eigen::VectorXd u2 = ds.row_unit(t % ds.size());
            CHECK(oracle::rel_err(model.latent_covariance(u, u2), ref.latent_cov(u, u2)) <= 1e-7);
        }
    }
}

TEST_CASE("factor reconstructs the covariance") {
    Rng rng(3);
    Dataset ds = noisy_sine_data(30, 2, rng);
    Eigen::Vector2d omega(0.5, -0.2);
    FittedGP model = FittedGP::condition(ds, KernelFamily::matern(MaternNu::FiveHalves), omega, 0.05);
    Eigen::MatrixXd v = correlation_matrix(model.kernel(), lengthscale_weights(omega), ds.x_unit());
    v.diagonal().array() += 0.05 + model.jitter();
    Eigen::MatrixXd l = model.factor();
    CHECK((l * l.transpose() - v).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("zero nugget interpolates the training data") {
    Rng rng(9);
    Dataset ds(Box::unit(1));
    for (double u : {0.05, 0.3, 0.55, 0.8, 0.97}) ds.add_unit(v1(u), std::sin(7 * u));
    FittedGP model = FittedGP::condition(ds, KernelFamily::matern(MaternNu::FiveHalves), v1(0.5), 0.0);
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
        PosteriorPrediction p = posterior(model, ds.row_unit(i));
        CHECK(std::fabs(p.mean - ds.y_at(i)) <= 1e-6);
        CHECK(std::fabs(p.variance) <= 1e-8);
    }

    SearchConfig noiseless;
    noiseless.tau_upper = 0.0;
    noiseless.seed = 4;
    FittedGP fitted = fit(ds, KernelFamily::squared_exponential(), noiseless);
    CHECK(fitted.hyper().tau == 0.0);
    for (Eigen::Index i = 0; i < ds.size(); ++i)
        CHECK(std::fabs(posterior(fitted, ds.row_unit(i)).mean - ds.y_at(i)) <= 1e-6);
}

TEST_CASE("posterior reverts to the prior far from the data") {
    Dataset ds(Box::unit(1));
    for (double u : {0.0, 0.02, 0.04, 0.06}) ds.add_unit(v1(u), 1.0 + std::cos(30 * u) + u);
    FittedGP model = FittedGP::condition(ds, KernelFamily::squared_exponential(), v1(4.0), 0.02);
    PosteriorPrediction p = posterior(model, v1(1.0));
    const double beta_raw = model.standardization().mean + model.standardization().scale * model.hyper().beta[0];
    CHECK(std::fabs(p.mean - beta_raw) <= 1e-3 * std::fabs(beta_raw));
    CHECK(p.variance >= model.prior_variance() * (1.0 + model.hyper().tau) - 1e-6);
}

TEST_CASE("predictive variance respects the noise floor") {
    Rng rng(77);
    for (int m = 0; m < 5; ++m) {
        Dataset ds = noisy_sine_data(25, 2, rng);
        FittedGP model = fit(ds, KernelFamily::matern(MaternNu::FiveHalves), SearchConfig{static_cast<std::uint64_t>(m)});
        Eigen::MatrixXd grid = acq::unit_grid(2, 31);
        Eigen::VectorXd mean, var;
        model.predict_batch(grid, mean, var);
        CHECK(var.minCoeff() >= model.noise_variance() - 1e-9);
    }
}

TEST_CASE("posterior input validation") {
    Rng rng(2);
    FittedGP model = FittedGP::condition(noisy_sine_data(6, 1, rng), KernelFamily::squared_exponential(), v1(0.0), 0.1);
    CHECK_NOTHROW(posterior(model, v1(1.0 + 5e-10)));
    CHECK_THROWS_AS(posterior(model, v1(1.001)), Error);
    CHECK_THROWS_AS(posterior(model, Eigen::Vector2d(0.5, 0.5)), Error);
}

TEST_CASE("fit recovers hyperparameters of a sampled squared-exponential process") {
    // Draws from a GP with omega = 1, tau = 0.05, sigma2 = 1. A single draw
    // of n = 60 can put the nugget estimate anywhere in [0, 1], so the
    // recovery bounds apply to the median over eleven draws.
    std::vector<double> taus, omegas;
    for (std::uint64_t seed = 100; seed < 111; ++seed) {
        Rng rng(seed);
        const int n = 60;
        Eigen::MatrixXd x = design::lhs(n, 1, rng);
        Eigen::MatrixXd v = correlation_matrix(KernelFamily::squared_exponential(), lengthscale_weights(v1(1.0)), x);
        v.diagonal().array() += 0.05;
        Eigen::MatrixXd l = v.llt().matrixL();
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z[i] = rng.normal();
        Dataset ds = Dataset::from_unit(Box::unit(1), x, l * z);
        FittedGP model = fit(ds, KernelFamily::squared_exponential(), SearchConfig{7});
        CHECK(model.loglik() >= profile_loglik(ds, KernelFamily::squared_exponential(), v1(1.0), 0.05).loglik);
        taus.push_back(model.hyper().tau);
        omegas.push_back(model.hyper().omega[0]);
    }
    std::nth_element(taus.begin(), taus.begin() + 5, taus.end());
    std::nth_element(omegas.begin(), omegas.begin() + 5, omegas.end());
    CHECK(std::fabs(taus[5] - 0.05) <= 0.05);
    CHECK(std::fabs(omegas[5] - 1.0) <= 1.0);
}

TEST_CASE("fit is deterministic and its closed forms are consistent") {
    Rng rng(8);
    Dataset ds = noisy_sine_data(20, 2, rng);
    for (const auto& k : {KernelFamily::power_exponential(2.0), KernelFamily::matern(MaternNu::FiveHalves)}) {
        FittedGP a = fit(ds, k, SearchConfig{31});
        FittedGP b = fit(ds, k, SearchConfig{31});
        CHECK(a.hyper().omega == b.hyper().omega);
        CHECK(a.hyper().tau == b.hyper().tau);
        CHECK(a.hyper().sigma2 == b.hyper().sigma2);
        CHECK(a.kernel() == b.kernel());
        CHECK(a.loglik() == b.loglik());
        for (Eigen::Index i = 0; i < a.hyper().omega.size(); ++i) {
            CHECK(a.hyper().omega[i] >= -10.0);
            CHECK(a.hyper().omega[i] <= 10.0);
        }
        CHECK(a.hyper().tau >= 0.0);
        CHECK(a.hyper().tau <= 1.0);
        oracle::DenseGP ref = dense_of(a);
        CHECK(oracle::rel_err(a.hyper().sigma2, ref.sigma2) <= 1e-10);
        CHECK(std::fabs(a.hyper().beta[0] - ref.beta) <= 1e-10 * std::max(1.0, std::fabs(ref.beta)));
    }
}

TEST_CASE("fitted likelihood is at least that of the search box centre") {
    Rng rng(12);
    Dataset ds = noisy_sine_data(15, 1, rng);
    FittedGP model = fit(ds, KernelFamily::squared_exponential(), SearchConfig{1});
    CHECK(model.loglik() >= profile_loglik(ds, KernelFamily::squared_exponential(), v1(0.0), 0.5).loglik);
}

TEST_CASE("likelihood gradient passes a Richardson consistency check") {
    Rng rng(55);
    Dataset ds = noisy_sine_data(25, 2, rng);
    const KernelFamily k = KernelFamily::matern(MaternNu::FiveHalves);
    for (int t = 0; t < 10; ++t) {
        Eigen::VectorXd theta(3);
        theta << -1 + 2 * rng.uniform(), -1 + 2 * rng.uniform(), 0.05 + 0.5 * rng.uniform();
        auto f = [&](const Eigen::VectorXd& th) { return profile_loglik(ds, k, th.head(2), th[2]).loglik; };
        for (int i = 0; i < 3; ++i) {
            auto central = [&](double h) {
                Eigen::VectorXd up = theta, dn = theta;
                up[i] += h;
                dn[i] -= h;
                return (f(up) - f(dn)) / (2 * h);
            };
            const double g1 = central(1e-3), g2 = central(5e-4);
            CHECK(std::fabs(g1 - g2) <= 1e-4 * std::max(1.0, std::fabs(g2)));
        }
    }
}

TEST_CASE("acquisition argmax is invariant to input and output normalization") {
    Rng rng(64);
    Box raw{v1(-3.0), v1(7.0)};
    Dataset a(raw), b(Box::unit(1));
    std::vector<double> us, ys;
    for (int i = 0; i < 12; ++i) {
        double u = rng.uniform();
        us.push_back(u);
        ys.push_back(50 + 20 * std::sin(8 * u) + rng.normal());
    }
    double mean = 0, sd = 0;
    for (double y : ys) mean += y / 12;
    for (double y : ys) sd += (y - mean) * (y - mean) / 11;
    sd = std::sqrt(sd);
    for (int i = 0; i < 12; ++i) {
        a.add_raw(raw.from_unit(v1(us[i])), ys[i]);
        b.add_unit(v1(us[i]), (ys[i] - mean) / sd);
    }
    FittedGP ma = fit(a, KernelFamily::matern(MaternNu::FiveHalves), SearchConfig{5});
    FittedGP mb = fit(b, KernelFamily::matern(MaternNu::FiveHalves), SearchConfig{5});
    Eigen::MatrixXd grid = acq::unit_grid(1, 201);
    for (auto kind : {acq::AcquisitionKind::EI, acq::AcquisitionKind::PI, acq::AcquisitionKind::UC}) {
        acq::AcquisitionSpec spec;
        spec.kind = kind;
        Eigen::Index ia, ib;
        acq::Acquisition(ma, spec).evaluate(grid).maxCoeff(&ia);
        acq::Acquisition(mb, spec).evaluate(grid).maxCoeff(&ib);
        CHECK(ia == ib);
    }
}
