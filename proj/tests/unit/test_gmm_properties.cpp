#include "physec/gmm.hpp"
#include "support/em_checks.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace physec;

TEST_SUITE("gmm") {

TEST_CASE("one EM iteration matches the scalar oracle") {
    CHECK(testsupport::em_oracle_discrepancy() <= 1e-12);
}

TEST_CASE("EM invariants over random datasets") {
    const auto r = testsupport::run_em_properties(100, 0xC0FFEE);
    CHECK(r.datasets == 100);
    MESSAGE("stepwise runs stopped by a starved component: " << r.degenerate_runs
            << ", fits that exhausted their restarts: " << r.fit_failures);
    CHECK(r.fit_failures <= r.datasets / 10);
    CHECK(r.worst_ll_drop <= 1e-8);
    CHECK(r.worst_row_sum_error <= 1e-12);
    CHECK(r.entries_in_unit_interval);
    CHECK(r.worst_weight_sum_error <= 1e-12);
    CHECK(r.covariances_spd);
}

TEST_CASE("swapping component labels at initialization gives the same density") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        std::mt19937_64 rng(seed);
        const Matrix data = testsupport::random_mixture_data(150, 3, 2, rng);
        const GmmModel start = initialize(data, 2, InitStrategy::random_points, seed);
        const GmmModel swapped({start.component(1), start.component(0)});
        const auto a = fit(data, 2, FitOptions{}, start);
        const auto b = fit(data, 2, FitOptions{}, swapped);
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            const Vector x = data.row(i).transpose();
            CHECK(std::abs(log_density(a, x) - log_density(b, x)) <= 1e-8);
        }
    }
}

}
