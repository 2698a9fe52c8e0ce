#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "ccd/errors.hpp"
#include "ccd/gp.hpp"
#include "ccd/rng.hpp"
#include "oracles.hpp"

using namespace ccd;

namespace {

Eigen::MatrixXd random_inputs(Rng& rng, Eigen::Index n, Eigen::Index d) {
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = uniform01(rng);
    return x;
}

oracle::GpOracle oracle_of(const GpModel& m) {
    oracle::GpOracle o{m.params().variance, m.params().lengthscales, m.diagonal(), {}, {}};
    for (Eigen::Index i = 0; i < m.inputs().rows(); ++i) {
        const Eigen::VectorXd row = m.inputs().row(i).transpose();
        o.xs.emplace_back(row.data(), row.data() + row.size());
        o.resid.push_back(m.targets()[i] - m.prior_mean()(row));
    }
    return o;
}

double quad_prior(const Eigen::VectorXd& x) { return 0.3 + x.squaredNorm(); }

}  // namespace

TEST_SUITE("gp") {

TEST_CASE("kernel closed forms") {
    const KernelParams p{1.0, {1.0}, 0.0};
    Eigen::VectorXd x(1), y(1);
    x << 0.2;
    CHECK(kernel_eval(p, x, x) == 1.0);
    y << 1.2;
    CHECK(kernel_eval(p, x, y) == doctest::Approx(0.60653).epsilon(1e-5));
    y << 20.2;
    CHECK(kernel_eval(p, x, y) < 1e-10);
    const KernelParams q{2.5, {0.3, 0.7}, 0.0};
    Eigen::VectorXd a(2), b(2);
    a << 0.1, 0.9;
    b << 0.4, 0.2;
    CHECK(kernel_eval(q, a, b) == doctest::Approx(oracle::se_kernel(2.5, {0.3, 0.7}, {0.1, 0.9}, {0.4, 0.2})));
}

TEST_CASE("kernel is symmetric and Gram matrices are positive semidefinite") {
    Rng rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        const auto d = 1 + rep % 3;
        const auto x = random_inputs(rng, 2 + rep % 12, d);
        KernelParams p{0.1 + 3 * uniform01(rng), std::vector<double>(d), 0.0};
        for (auto& l : p.lengthscales) l = 0.05 + uniform01(rng);
        const Eigen::MatrixXd k = gram(p, x);
        CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("posterior and marginal likelihood match a dense solve") {
    Rng rng(2);
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::Index d = 1 + rep % 2;
        const Eigen::Index n = 3 + rep % 4;
        const auto x = random_inputs(rng, n, d);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) y[i] = std::sin(4 * x(i, 0)) + 0.3 * uniform01(rng);
        KernelParams p{0.5 + uniform01(rng), std::vector<double>(static_cast<std::size_t>(d)), 1e-3 * uniform01(rng)};
        for (auto& l : p.lengthscales) l = 0.1 + uniform01(rng);
        const auto m = GpModel::with_params(x, y, rep % 2 ? PriorMean(quad_prior) : PriorMean(zero_mean), p);
        const auto o = oracle_of(m);
        CHECK(m.log_marginal_likelihood() == doctest::Approx(o.lml()).epsilon(1e-10));
        for (int q = 0; q < 5; ++q) {
            Eigen::VectorXd query = random_inputs(rng, 1, d).row(0).transpose();
            const auto post = m.posterior(query);
            const auto [corr, var] = o.posterior({query.data(), query.data() + d});
            CHECK(std::abs(post.mean - (m.prior_mean()(query) + corr)) <= 1e-8);
            CHECK(std::abs(post.variance - std::max(0.0, var)) <= 1e-8);
            CHECK(m.posterior_mean(query) == doctest::Approx(post.mean).epsilon(1e-12));
        }
    }
}

TEST_CASE("scalar marginal likelihood") {
    Eigen::MatrixXd x(1, 1);
    x << 0.0;
    Eigen::VectorXd y(1);
    y << 0.0;
    const auto m = GpModel::with_params(x, y, zero_mean, {1.0, {1.0}, 0.0});
    CHECK(m.log_marginal_likelihood() == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-7));
    CHECK(m.log_marginal_likelihood() == doctest::Approx(-0.9189).epsilon(1e-4));
}

TEST_CASE("zero targets leave only the determinant and constant") {
    Rng rng(4);
    const auto x = random_inputs(rng, 4, 1);
    const auto m = GpModel::with_params(x, Eigen::VectorXd::Zero(4), zero_mean, {1.3, {0.4}, 1e-3});
    const Eigen::MatrixXd k = m.regularised_gram();
    const double logdet = std::log(k.determinant());
    CHECK(m.log_marginal_likelihood() == doctest::Approx(-0.5 * logdet - 2.0 * std::log(2 * std::numbers::pi)));
}

TEST_CASE("cached factor reproduces the regularised Gram") {
    Rng rng(5);
    const auto x = random_inputs(rng, 8, 2);
    const auto m = GpModel::with_params(x, Eigen::VectorXd::Ones(8), zero_mean, {2.0, {0.3, 0.5}, 1e-4});
    const Eigen::MatrixXd l = m.factor().matrixL();
    CHECK((l * l.transpose() - m.regularised_gram()).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("interpolation at tiny noise") {
    Eigen::MatrixXd x(1, 1);
    x << 0.0;
    Eigen::VectorXd y(1);
    y << 1.0;
    const auto one = GpModel::with_params(x, y, zero_mean, {1.0, {1.0}, 1e-8});
    CHECK(std::abs(one.posterior(Eigen::VectorXd::Zero(1)).mean - 1.0) <= 1e-6);

    Rng rng(6);
    for (Eigen::Index d : {1, 2}) {
        const auto xs = random_inputs(rng, 7, d);
        Eigen::VectorXd ys(7);
        for (Eigen::Index i = 0; i < 7; ++i) ys[i] = xs.row(i).sum() * 2 - 1;
        // Mean at a training point is y - diag * alpha; short lengthscales keep alpha small.
        const auto m = GpModel::with_params(xs, ys, zero_mean, {1.0, std::vector<double>(d, 0.05), 1e-8});
        for (Eigen::Index i = 0; i < 7; ++i) {
            const auto post = m.posterior(xs.row(i).transpose());
            CHECK(std::abs(post.mean - ys[i]) <= 1e-6);
            CHECK(post.variance <= 1e-6 * m.params().variance);
        }
    }
}

TEST_CASE("far from data the posterior reverts to the prior") {
    Eigen::MatrixXd x(3, 1);
    x << 0.0, 0.1, 0.2;
    const auto m = GpModel::with_params(x, Eigen::Vector3d(1, 2, 3), quad_prior, {1.7, {0.1}, 1e-6});
    Eigen::VectorXd far(1);
    far << 2.5;
    const auto post = m.posterior(far);
    CHECK(post.mean == doctest::Approx(quad_prior(far)).epsilon(1e-9));
    CHECK(post.variance == doctest::Approx(1.7).epsilon(1e-9));
}

TEST_CASE("posterior variance never exceeds the prior variance") {
    Rng rng(7);
    for (int rep = 0; rep < 30; ++rep) {
        const Eigen::Index d = 1 + rep % 2;
        const auto x = random_inputs(rng, 1 + rep % 9, d);
        Eigen::VectorXd y = random_inputs(rng, x.rows(), 1).col(0);
        const auto m = GpModel::fit(x, y, zero_mean);
        for (int q = 0; q < 20; ++q) {
            const auto post = m.posterior(random_inputs(rng, 1, d).row(0).transpose() * 1.5);
            CHECK(post.variance >= 0.0);
            CHECK(post.variance <= m.params().variance * (1 + 1e-12));
        }
    }
}

TEST_CASE("posterior does not depend on training order") {
    Rng rng(8);
    const auto x = random_inputs(rng, 6, 2);
    Eigen::VectorXd y = random_inputs(rng, 6, 1).col(0);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
    perm.indices() << 3, 0, 5, 1, 4, 2;
    const auto a = GpModel::fit(x, y, zero_mean);
    const auto b = GpModel::fit(perm * x, perm * y, zero_mean);
    CHECK(a.params() == b.params());
    for (int q = 0; q < 10; ++q) {
        const Eigen::VectorXd query = random_inputs(rng, 1, 2).row(0).transpose();
        CHECK(a.posterior(query).mean == doctest::Approx(b.posterior(query).mean).epsilon(1e-9));
        CHECK(a.posterior(query).variance == doctest::Approx(b.posterior(query).variance).epsilon(1e-9));
    }
}

TEST_CASE("grid search picks the likelihood maximiser") {
    Rng rng(9);
    const auto grid = HyperGrid::defaults();
    for (Eigen::Index d : {1, 2}) {
        const auto x = random_inputs(rng, 5, d);
        Eigen::VectorXd y(5);
        for (Eigen::Index i = 0; i < 5; ++i) y[i] = std::cos(3 * x(i, 0)) + 0.1 * uniform01(rng);
        const auto m = GpModel::fit(x, y, zero_mean, grid);
        double best = -1e300;
        for (const auto& p : grid.enumerate(static_cast<std::size_t>(d))) {
            // Re-evaluated with the same first-level jitter the fit uses.
            auto o = oracle_of(GpModel::with_params(x, y, zero_mean, p));
            best = std::max(best, o.lml());
        }
        CHECK(oracle_of(m).lml() == doctest::Approx(best).epsilon(1e-9));
        CHECK(grid.enumerate(static_cast<std::size_t>(d)).size() ==
              static_cast<std::size_t>(std::pow(grid.lengthscales.size(), d)) * grid.variances.size() * grid.noises.size());
    }
}

TEST_CASE("constant targets give a constant posterior") {
    Rng rng(10);
    const auto x = random_inputs(rng, 8, 2);
    const auto m = GpModel::fit(x, Eigen::VectorXd::Constant(8, 0.7), [](const Eigen::VectorXd&) { return 0.7; });
    for (int q = 0; q < 10; ++q)
        CHECK(m.posterior(random_inputs(rng, 1, 2).row(0).transpose()).mean == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("duplicate points with conflicting targets need noise") {
    Eigen::MatrixXd x(2, 1);
    x << 0.5, 0.5;
    const Eigen::Vector2d y(0.0, 1.0);
    const auto m = GpModel::with_params(x, y, zero_mean, {1.0, {1.0}, 0.0});
    CHECK(m.diagonal() > 0.0);
    CHECK(std::isfinite(m.posterior(Eigen::VectorXd::Constant(1, 0.5)).mean));
}

TEST_CASE("invalid fits are rejected") {
    Eigen::MatrixXd x(2, 1);
    x << 0.0, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(GpModel::with_params(x, Eigen::Vector2d(0, 1), zero_mean, {1.0, {1.0}, 0.0}), FitError);
    x << 0.0, 1.0;
    CHECK_THROWS_AS(GpModel::with_params(x, Eigen::Vector2d(0, 1), zero_mean, {1.0, {1.0}, -0.5}), ValidationError);
    CHECK_THROWS_AS(GpModel::with_params(x, Eigen::Vector2d(0, 1), zero_mean, {1.0, {1.0, 1.0}, 0.0}), ValidationError);
    CHECK_THROWS_AS(GpModel::fit(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), zero_mean), ValidationError);
}

}
