#include "support/em_checks.hpp"

#include "physec/error.hpp"
#include "physec/gmm.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace testsupport {

using physec::GaussianComponent;
using physec::GmmModel;
using physec::Matrix;
using physec::Vector;

double em_oracle_discrepancy() {
    const std::vector<double> x{-1.3, -0.2, 0.4, 2.1, 3.7, 4.4};
    const oracle::Mixture1d start{{0.4, 0.6}, {0.0, 3.0}, {1.5, 0.8}};
    const auto expected = oracle::em_iteration_1d(x, start, physec::kDefaultRidgeScale, physec::kMinRidge);

    Matrix data(6, 1);
    for (std::size_t i = 0; i < x.size(); ++i) data(static_cast<Eigen::Index>(i), 0) = x[i];
    std::vector<GaussianComponent> comps;
    for (int k = 0; k < 2; ++k)
        comps.push_back({start.weight[k], Vector::Constant(1, start.mean[k]), Matrix::Constant(1, 1, start.var[k])});
    const GmmModel model(comps);

    const auto one_step = physec::m_step(data, physec::e_step(model, data).resp);
    physec::FitOptions single;
    single.max_iter = 1;
    const auto fitted = physec::fit(data, 2, single, model);

    double worst = 0.0;
    for (const GmmModel* m : {&one_step, &fitted}) {
        for (std::size_t k = 0; k < 2; ++k) {
            worst = std::max(worst, std::abs(m->component(k).weight - expected.weight[k]));
            worst = std::max(worst, std::abs(m->component(k).mean(0) - expected.mean[k]));
            worst = std::max(worst, std::abs(m->component(k).covariance(0, 0) - expected.var[k]));
        }
    }
    // The log-likelihood the fit reports after its iteration is that of the updated model.
    const double ll = oracle::log_likelihood_1d(x, expected);
    worst = std::max(worst, std::abs(fitted.fit_info().final_log_likelihood - ll) / std::abs(ll));
    return worst;
}

namespace {

bool symmetric_positive_definite(const Matrix& cov) {
    if (cov != cov.transpose()) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() > 0.0;
}

void check_model(const GmmModel& m, EmPropertyReport& report) {
    double total = 0.0;
    for (const auto& c : m.components()) {
        total += c.weight;
        report.covariances_spd = report.covariances_spd && symmetric_positive_definite(c.covariance);
    }
    report.worst_weight_sum_error = std::max(report.worst_weight_sum_error, std::abs(total - 1.0));
}

void check_resp(const physec::Responsibilities& r, EmPropertyReport& report) {
    for (Eigen::Index i = 0; i < r.values.rows(); ++i) {
        report.worst_row_sum_error = std::max(report.worst_row_sum_error, std::abs(r.values.row(i).sum() - 1.0));
        report.entries_in_unit_interval = report.entries_in_unit_interval && r.values.row(i).minCoeff() >= 0.0 &&
                                          r.values.row(i).maxCoeff() <= 1.0;
    }
}

void check_trace(const std::vector<double>& ll, EmPropertyReport& report) {
    for (std::size_t t = 1; t < ll.size(); ++t) report.worst_ll_drop = std::max(report.worst_ll_drop, ll[t - 1] - ll[t]);
}

}  // namespace

EmPropertyReport run_em_properties(std::size_t datasets, std::uint64_t seed) {
    EmPropertyReport report;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dim_dist(1, 8);
    std::uniform_int_distribution<std::size_t> k_dist(1, 3);

    for (std::size_t d = 0; d < datasets; ++d) {
        const std::size_t dim = dim_dist(rng);
        const std::size_t clusters = k_dist(rng);
        std::uniform_int_distribution<std::size_t> n_dist(clusters * 5 * (dim + 1), 200);
        const std::size_t n = n_dist(rng);
        const Matrix data = random_mixture_data(n, dim, clusters, rng);
        const std::size_t k = 2;
        ++report.datasets;

        // Stepwise EM with the library's own pieces.
        GmmModel model = physec::initialize(data, k, physec::InitStrategy::random_points, d);
        const physec::MStepOptions m_opts{physec::kDefaultRidgeScale, static_cast<double>(dim) + 1.0};
        check_model(model, report);
        std::vector<double> ll;
        try {
            for (std::size_t it = 0; it < 200; ++it) {
                const auto e = physec::e_step(model, data);
                check_resp(e.resp, report);
                ll.push_back(e.total_log_likelihood);
                ++report.iterations;
                if (ll.size() > 1 && std::abs(ll.back() - ll[ll.size() - 2]) <= 1e-10 * std::abs(ll.back())) break;
                model = physec::m_step(data, e.resp, m_opts);
                check_model(model, report);
            }
        } catch (const physec::DegenerateComponentError&) {
            ++report.degenerate_runs;
        }
        check_trace(ll, report);

        // The same invariants along fit()'s own trajectory.
        physec::FitOptions o;
        o.seed = seed + d;
        o.init = d % 2 ? physec::InitStrategy::kmeans_pp : physec::InitStrategy::random_points;
        try {
            const auto fitted = physec::fit(data, k, o);
            check_model(fitted, report);
            check_resp(physec::e_step(fitted, data).resp, report);
            check_trace(fitted.fit_info().log_likelihood_trace, report);
        } catch (const physec::FitError&) {
            ++report.fit_failures;
        }
    }
    return report;
}

}  // namespace testsupport
