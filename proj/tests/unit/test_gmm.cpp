#include "physec/error.hpp"
#include "physec/gmm.hpp"
#include "physec/gmm_io.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>

using namespace physec;

namespace {

GaussianComponent scalar_component(double weight, double mean, double var) {
    return {weight, Vector::Constant(1, mean), Matrix::Constant(1, 1, var)};
}

GmmModel mixture_1d(double w0, double m0, double v0, double m1, double v1) {
    return GmmModel({scalar_component(w0, m0, v0), scalar_component(1.0 - w0, m1, v1)});
}

Matrix column(std::initializer_list<double> values) {
    Matrix m(static_cast<Eigen::Index>(values.size()), 1);
    Eigen::Index i = 0;
    for (double v : values) m(i++, 0) = v;
    return m;
}

}  // namespace

TEST_SUITE("gmm") {

TEST_CASE("standard normal log density") {
    const GmmModel m({GaussianComponent{1.0, Vector::Zero(1), Matrix::Identity(1, 1)}});
    CHECK(log_density(m, Vector::Zero(1)) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK(log_density(m, Vector::Zero(1)) == doctest::Approx(-0.918939).epsilon(1e-6));
}

TEST_CASE("multivariate log density matches a closed form") {
    Matrix cov(2, 2);
    cov << 2.0, 0.5, 0.5, 1.0;
    Vector mu(2);
    mu << 1.0, -1.0;
    const GmmModel m({GaussianComponent{1.0, mu, cov}});
    Vector x(2);
    x << 0.3, 0.4;
    const Vector d = x - mu;
    const double det = 2.0 * 1.0 - 0.25;
    const double quad = (d(0) * d(0) * 1.0 - 2.0 * d(0) * d(1) * 0.5 + d(1) * d(1) * 2.0) / det;
    const double expected = -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * quad;
    CHECK(log_density(m, x) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("a zero-weight component does not change the density") {
    const GmmModel single({scalar_component(1.0, 2.0, 3.0)});
    const GmmModel padded({scalar_component(1.0, 2.0, 3.0), scalar_component(0.0, -5.0, 1.0)});
    for (double x : {-3.0, 0.0, 2.0, 7.5})
        CHECK(log_density(padded, Vector::Constant(1, x)) == doctest::Approx(log_density(single, Vector::Constant(1, x))));
}

TEST_CASE("identical components") {
    const GmmModel single({scalar_component(1.0, 1.0, 2.0)});
    const GmmModel twin({scalar_component(0.3, 1.0, 2.0), scalar_component(0.7, 1.0, 2.0)});
    const Matrix data = column({-1.0, 0.0, 1.0, 4.0});
    const auto r = e_step(twin, data);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        CHECK(r.resp.values(i, 0) == doctest::Approx(0.3).epsilon(1e-14));
        CHECK(r.resp.values(i, 1) == doctest::Approx(0.7).epsilon(1e-14));
        CHECK(log_density(twin, data.row(i).transpose()) ==
              doctest::Approx(log_density(single, data.row(i).transpose())).epsilon(1e-14));
    }
}

TEST_CASE("posterior is symmetric between mirrored components") {
    const auto r = e_step(mixture_1d(0.5, -2.0, 1.0, 2.0, 1.0), column({0.0}));
    CHECK(r.resp.values(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.resp.values(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("analytic two-component posterior") {
    const auto r = e_step(mixture_1d(0.5, 0.0, 1.0, 4.0, 1.0), column({1.0}));
    const double a = oracle::normal_pdf(1.0, 0.0, 1.0);
    const double b = oracle::normal_pdf(1.0, 4.0, 1.0);
    CHECK(r.resp.values(0, 0) == doctest::Approx(a / (a + b)).epsilon(1e-14));
    // log-ratio ((1 - 4)^2 - 1^2) / 2 = 4
    CHECK(r.resp.values(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-4.0))).epsilon(1e-14));
    const double ll = std::log(0.5 * oracle::normal_pdf(1.0, 0.0, 1.0) + 0.5 * oracle::normal_pdf(1.0, 4.0, 1.0));
    CHECK(r.total_log_likelihood == doctest::Approx(ll).epsilon(1e-14));
}

TEST_CASE("e-step survives far-away points") {
    Matrix cov = Matrix::Identity(48, 48) * 1e-4;
    const GmmModel m({GaussianComponent{0.5, Vector::Zero(48), cov}, GaussianComponent{0.5, Vector::Ones(48), cov}});
    const auto r = e_step(m, Matrix::Constant(1, 48, 50.0));
    CHECK(std::isfinite(r.total_log_likelihood));
    CHECK(r.resp.values.row(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.resp.values(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("contract errors") {
    const auto m = mixture_1d(0.5, 0.0, 1.0, 1.0, 1.0);
    CHECK_THROWS_AS(log_density(m, Vector::Zero(2)), ContractError);
    CHECK_THROWS_AS(e_step(m, Matrix::Zero(3, 2)), ContractError);
    CHECK_THROWS_AS(e_step(m, column({0.0, std::nan("")})), ContractError);
    CHECK_THROWS_AS(e_step(m, column({std::numeric_limits<double>::infinity()})), ContractError);
    CHECK_THROWS_AS(GmmModel({scalar_component(0.4, 0.0, 1.0), scalar_component(0.4, 0.0, 1.0)}), ContractError);
    CHECK_THROWS_AS(GmmModel({scalar_component(1.0, 0.0, -1.0)}), ContractError);
}

TEST_CASE("hard responsibilities give per-cluster statistics") {
    const Matrix data = column({0.0, 1.0, 2.0, 10.0, 14.0});
    Responsibilities r{Matrix::Zero(5, 2)};
    r.values(0, 0) = r.values(1, 0) = r.values(2, 0) = 1.0;
    r.values(3, 1) = r.values(4, 1) = 1.0;
    const auto m = m_step(data, r);
    CHECK(m.component(0).weight == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(m.component(1).weight == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(m.component(0).mean(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m.component(1).mean(0) == doctest::Approx(12.0).epsilon(1e-15));
    CHECK(m.component(0).covariance(0, 0) == doctest::Approx(2.0 / 3.0 * (1.0 + 1e-6)).epsilon(1e-14));
    CHECK(m.component(1).covariance(0, 0) == doctest::Approx(4.0 * (1.0 + 1e-6)).epsilon(1e-14));
}

TEST_CASE("two points, one component") {
    const Matrix data = column({0.0, 2.0});
    const auto m = m_step(data, Responsibilities{Matrix::Ones(2, 1)});
    CHECK(m.component(0).mean(0) == 1.0);
    CHECK(m.component(0).weight == 1.0);
}

TEST_CASE("uniform responsibilities on three points") {
    const Matrix data = column({-1.0, 0.0, 1.0});
    const auto m = m_step(data, Responsibilities{Matrix::Constant(3, 2, 0.5)});
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(m.component(k).mean(0) == doctest::Approx(0.0));
        const double ridge = 1e-6 * (2.0 / 3.0);
        CHECK(m.component(k).covariance(0, 0) == doctest::Approx(2.0 / 3.0 + ridge).epsilon(1e-14));
        CHECK(m.component(k).weight == doctest::Approx(0.5).epsilon(1e-15));
    }
}

TEST_CASE("a component without mass is degenerate") {
    const Matrix data = column({0.0, 1.0, 2.0});
    Responsibilities r{Matrix::Zero(3, 2)};
    r.values.col(0).setOnes();
    try {
        m_step(data, r);
        FAIL("expected DegenerateComponentError");
    } catch (const DegenerateComponentError& e) {
        CHECK(e.component() == 1);
    }
}

TEST_CASE("regularization examples") {
    const Matrix eye = Matrix::Identity(4, 4);
    CHECK(regularize_covariance(eye, 1e-6).isApprox((1.0 + 1e-6) * eye, 1e-15));

    const auto zero = regularize_covariance_ex(Matrix::Zero(3, 3), 1e-6);
    CHECK(zero.epsilon == kMinRidge);
    CHECK(zero.covariance.isApprox(kMinRidge * Matrix::Identity(3, 3)));
    CHECK_FALSE(zero.input_positive_definite);
    CHECK(zero.covariance.llt().info() == Eigen::Success);

    Vector v(5);
    v << 1.0, -2.0, 0.5, 3.0, 1.5;
    const Matrix outer = v * v.transpose();
    const auto reg = regularize_covariance_ex(outer, 1e-6);
    const double expected_eps = 1e-6 * outer.trace() / 5.0;
    CHECK(reg.epsilon == doctest::Approx(expected_eps));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(reg.covariance);
    CHECK(eig.eigenvalues().minCoeff() >= reg.epsilon * (1.0 - 1e-6));

    Matrix asym = Matrix::Identity(2, 2);
    asym(0, 1) = 0.1;
    CHECK_THROWS_AS(regularize_covariance(asym, 1e-6), ContractError);
}

TEST_CASE("one spherical gaussian, one component") {
    std::mt19937_64 rng(17);
    Vector mu(3);
    mu << 1.0, -2.0, 5.0;
    const double sd = 2.0;
    const std::size_t n = 500;
    const Matrix data = testsupport::gaussian_rows(n, mu, sd, rng);
    const auto m = fit(data, 1);
    const double bound = 3.0 * sd / std::sqrt(static_cast<double>(n));
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(m.component(0).mean(j) - mu(j)) < bound);
    CHECK(m.fit_info().converged);
}

TEST_CASE("well separated 1-D clusters") {
    std::mt19937_64 rng(5);
    Matrix data(200, 1);
    data.topRows(100) = testsupport::gaussian_rows(100, Vector::Constant(1, 0.0), 1.0, rng);
    data.bottomRows(100) = testsupport::gaussian_rows(100, Vector::Constant(1, 100.0), 1.0, rng);
    auto check_recovered = [&](const GmmModel& m) {
        const std::size_t low = m.component(0).mean(0) < m.component(1).mean(0) ? 0 : 1;
        CHECK(std::abs(m.component(low).mean(0) - 0.0) < 0.5);
        CHECK(std::abs(m.component(1 - low).mean(0) - 100.0) < 0.5);
        CHECK(std::abs(m.component(0).weight - 0.5) < 0.1);
        CHECK(std::abs(m.component(1).weight - 0.5) < 0.1);
    };
    FitOptions o;
    o.seed = 0;
    check_recovered(fit(data, 2, o));
    o.init = InitStrategy::kmeans_pp;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        o.seed = seed;
        check_recovered(fit(data, 2, o));
    }
}

TEST_CASE("random points drawn from one cluster stall between the clusters") {
    std::mt19937_64 rng(5);
    Matrix data(200, 1);
    data.topRows(100) = testsupport::gaussian_rows(100, Vector::Constant(1, 0.0), 1.0, rng);
    data.bottomRows(100) = testsupport::gaussian_rows(100, Vector::Constant(1, 100.0), 1.0, rng);
    FitOptions o;
    o.seed = 3;
    const auto start = initialize(data, 2, InitStrategy::random_points, o.seed);
    REQUIRE(start.component(0).mean(0) > 50.0);
    REQUIRE(start.component(1).mean(0) > 50.0);
    const auto m = fit(data, 2, o);
    CHECK(std::abs(m.component(0).mean(0) - 50.0) < 5.0);
    CHECK(std::abs(m.component(1).mean(0) - 50.0) < 5.0);
}

TEST_CASE("warm start at a fixed point stops at once") {
    std::mt19937_64 rng(8);
    const Matrix data = testsupport::random_mixture_data(150, 3, 2, rng);
    FitOptions o;
    o.rel_tol = 1e-12;
    o.max_iter = 1000;
    const auto converged = fit(data, 2, o);
    const auto again = fit(data, 2, FitOptions{}, converged);
    CHECK(again.fit_info().iterations <= 2);
    const double a = converged.fit_info().final_log_likelihood;
    const double b = again.fit_info().final_log_likelihood;
    CHECK(std::abs(b - a) <= 1e-6 * std::abs(a));
}

TEST_CASE("fit is deterministic for a seed") {
    std::mt19937_64 rng(21);
    const Matrix data = testsupport::random_mixture_data(120, 4, 2, rng);
    FitOptions o;
    o.seed = 99;
    const auto a = fit(data, 2, o);
    const auto b = fit(data, 2, o);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(a.component(k).mean == b.component(k).mean);
        CHECK(a.component(k).covariance == b.component(k).covariance);
    }
    CHECK(a.fit_info().log_likelihood_trace == b.fit_info().log_likelihood_trace);
}

TEST_CASE("fit preconditions") {
    CHECK_THROWS_AS(fit(column({1.0}), 2), ContractError);
    CHECK_THROWS_AS(fit(column({1.0, 2.0}), 0), ContractError);
    CHECK_THROWS_AS(fit(column({1.0, 2.0, 3.0}), 2, FitOptions{}, GmmModel({scalar_component(1.0, 0.0, 1.0)})),
                    ContractError);
}

TEST_CASE("identical points exhaust the restart budget or fall back to the ridge") {
    const Matrix data = Matrix::Constant(10, 2, 3.0);
    const auto m = fit(data, 1);
    CHECK(m.component(0).mean.isApprox(Vector::Constant(2, 3.0)));
    CHECK(m.fit_info().regularization_applied);
}

TEST_CASE("initialization") {
    std::mt19937_64 rng(2);
    const Matrix data = testsupport::random_mixture_data(50, 3, 2, rng);
    for (auto init : {InitStrategy::random_points, InitStrategy::kmeans_pp}) {
        const auto m = initialize(data, 2, init, 4);
        CHECK(m.component(0).weight == 0.5);
        CHECK(m.component(0).mean != m.component(1).mean);
        bool mean_is_a_point = false;
        for (Eigen::Index i = 0; i < data.rows(); ++i)
            mean_is_a_point |= data.row(i).transpose() == m.component(0).mean;
        CHECK(mean_is_a_point);
        CHECK(m.component(0).covariance.isDiagonal());
    }
}

TEST_CASE("model snapshot round trip") {
    std::mt19937_64 rng(12);
    const Matrix data = testsupport::random_mixture_data(100, 3, 2, rng);
    const auto m = fit(data, 2);
    testsupport::TempDir dir;
    save_model(dir / "m.json", m);
    const auto back = load_model(dir / "m.json");
    REQUIRE(back.num_components() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(back.component(k).weight == doctest::Approx(m.component(k).weight).epsilon(1e-15));
        CHECK(back.component(k).mean.isApprox(m.component(k).mean, 1e-15));
        CHECK(back.component(k).covariance.isApprox(m.component(k).covariance, 1e-15));
    }
    CHECK(back.fit_info().iterations == m.fit_info().iterations);
    CHECK(back.fit_info().converged == m.fit_info().converged);
    for (Eigen::Index i = 0; i < data.rows(); ++i)
        CHECK(log_density(back, data.row(i).transpose()) ==
              doctest::Approx(log_density(m, data.row(i).transpose())).epsilon(1e-12));
}

TEST_CASE("corrupted snapshot names the key") {
    auto j = to_json(mixture_1d(0.5, 0.0, 1.0, 2.0, 1.0));
    j["components"][1].erase("covariance");
    try {
        gmm_from_json(j);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("covariance") != std::string::npos);
    }
    auto k = to_json(mixture_1d(0.5, 0.0, 1.0, 2.0, 1.0));
    k["dim"] = "two";
    CHECK_THROWS_AS(gmm_from_json(k), ParseError);
}

}
