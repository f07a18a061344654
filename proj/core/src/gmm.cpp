#include "physec/gmm.hpp"

#include "physec/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

namespace physec {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

bool is_symmetric(const Eigen::Ref<const Matrix>& m) {
    if (m.rows() != m.cols()) return false;
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    return ((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
}

void require_finite(const Eigen::Ref<const Matrix>& data, const char* what) {
    if (!data.allFinite()) throw ContractError(std::string(what) + " contains non-finite values");
}

double log_sum_exp(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
    const double m = row.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((row.array() - m).exp().sum());
}

}  // namespace

GmmModel::GmmModel(std::vector<GaussianComponent> components, FitInfo info)
    : components_(std::move(components)), info_(std::move(info)) {
    if (components_.empty()) throw ContractError("mixture needs at least one component");
    dim_ = static_cast<std::size_t>(components_.front().mean.size());
    if (dim_ == 0) throw ContractError("mixture dimension must be positive");

    double total = 0.0;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        auto& c = components_[k];
        const std::string tag = "component " + std::to_string(k);
        if (static_cast<std::size_t>(c.mean.size()) != dim_)
            throw ContractError(tag + ": mean has dimension " + std::to_string(c.mean.size()) +
                                ", expected " + std::to_string(dim_));
        if (static_cast<std::size_t>(c.covariance.rows()) != dim_ ||
            static_cast<std::size_t>(c.covariance.cols()) != dim_)
            throw ContractError(tag + ": covariance must be " + std::to_string(dim_) + "x" +
                                std::to_string(dim_));
        if (!(c.weight >= 0.0 && c.weight <= 1.0)) throw ContractError(tag + ": weight outside [0, 1]");
        if (!c.mean.allFinite() || !c.covariance.allFinite())
            throw ContractError(tag + ": non-finite parameters");
        if (!is_symmetric(c.covariance)) throw ContractError(tag + ": covariance is not symmetric");
        c.covariance = (0.5 * (c.covariance + c.covariance.transpose())).eval();
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ContractError("mixing weights sum to " + std::to_string(total) + ", expected 1");
    for (auto& c : components_) c.weight /= total;

    factors_.reserve(components_.size());
    log_dets_.reserve(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        Eigen::LLT<Matrix> llt(components_[k].covariance);
        if (llt.info() != Eigen::Success)
            throw ContractError("component " + std::to_string(k) + ": covariance is not positive definite");
        const Matrix& l = llt.matrixLLT();
        double log_det = 0.0;
        for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += std::log(l(i, i));
        log_dets_.push_back(2.0 * log_det);
        factors_.push_back(std::move(llt));
    }
}

double GmmModel::component_log_density(std::size_t k, const Eigen::Ref<const Vector>& x) const {
    if (static_cast<std::size_t>(x.size()) != dim_)
        throw ContractError("point has dimension " + std::to_string(x.size()) + ", model expects " +
                            std::to_string(dim_));
    const Vector diff = x - components_.at(k).mean;
    const Vector z = factors_[k].matrixL().solve(diff);
    return -0.5 * (static_cast<double>(dim_) * kLog2Pi + log_dets_[k] + z.squaredNorm());
}

Matrix GmmModel::weighted_log_densities(const Eigen::Ref<const Matrix>& data) const {
    if (static_cast<std::size_t>(data.cols()) != dim_)
        throw ContractError("data has " + std::to_string(data.cols()) + " columns, model expects " +
                            std::to_string(dim_));
    const auto n = data.rows();
    const auto kk = static_cast<Eigen::Index>(components_.size());
    Matrix out(n, kk);
    for (Eigen::Index k = 0; k < kk; ++k) {
        const auto& c = components_[static_cast<std::size_t>(k)];
        const Matrix diff_t = (data.rowwise() - c.mean.transpose()).transpose();
        const Matrix z = factors_[static_cast<std::size_t>(k)].matrixL().solve(diff_t);
        const double log_w = std::log(c.weight);
        const double base = -0.5 * (static_cast<double>(dim_) * kLog2Pi + log_dets_[static_cast<std::size_t>(k)]);
        out.col(k) = (log_w + base - 0.5 * z.colwise().squaredNorm().array()).matrix().transpose();
    }
    return out;
}

double log_density(const GmmModel& model, const Eigen::Ref<const Vector>& x) {
    if (static_cast<std::size_t>(x.size()) != model.dim())
        throw ContractError("point has dimension " + std::to_string(x.size()) + ", model expects " +
                            std::to_string(model.dim()));
    require_finite(x, "point");
    const Matrix row = x.transpose();
    const Matrix w = model.weighted_log_densities(row);
    return log_sum_exp(w.row(0));
}

EStepResult e_step(const GmmModel& model, const Eigen::Ref<const Matrix>& data) {
    if (data.rows() < 1) throw ContractError("e_step needs at least one data point");
    require_finite(data, "data");
    const Matrix w = model.weighted_log_densities(data);

    EStepResult out;
    out.resp.values.resize(w.rows(), w.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const double m = w.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (w.row(i).array() - m).exp().matrix();
        const double s = e.sum();
        out.resp.values.row(i) = e / s;
        total += m + std::log(s);
    }
    out.total_log_likelihood = total;
    return out;
}

RegularizedCovariance regularize_covariance_ex(const Eigen::Ref<const Matrix>& sigma, double ridge_scale) {
    if (sigma.rows() == 0 || sigma.rows() != sigma.cols()) throw ContractError("covariance must be square");
    if (!sigma.allFinite()) throw ContractError("covariance contains non-finite values");
    if (!is_symmetric(sigma)) throw ContractError("covariance is not symmetric");
    if (!(ridge_scale >= 0.0)) throw ContractError("ridge_scale must be non-negative");

    const auto m = sigma.rows();
    RegularizedCovariance out;
    out.input_positive_definite = Eigen::LLT<Matrix>(sigma).info() == Eigen::Success;
    out.epsilon = std::max(ridge_scale * sigma.trace() / static_cast<double>(m), kMinRidge);
    for (int attempt = 0; attempt < 40; ++attempt) {
        out.covariance = sigma;
        out.covariance.diagonal().array() += out.epsilon;
        if (Eigen::LLT<Matrix>(out.covariance).info() == Eigen::Success) return out;
        out.epsilon *= 10.0;
    }
    throw FitError("covariance could not be regularized to positive definite");
}

Matrix regularize_covariance(const Eigen::Ref<const Matrix>& sigma, double ridge_scale) {
    return regularize_covariance_ex(sigma, ridge_scale).covariance;
}

namespace {

struct ComponentEstimate {
    double mass = 0.0;
    Vector mean;
    Matrix covariance;
    bool input_pd = true;
};

ComponentEstimate estimate_component(const Eigen::Ref<const Matrix>& data, const Eigen::Ref<const Vector>& r,
                                     double mass, double ridge_scale) {
    ComponentEstimate c;
    c.mass = mass;
    c.mean = (data.transpose() * r) / mass;
    const Matrix diff = data.rowwise() - c.mean.transpose();
    const Matrix weighted = diff.array().colwise() * r.array();
    Matrix cov = (diff.transpose() * weighted) / mass;
    cov = (0.5 * (cov + cov.transpose())).eval();
    auto reg = regularize_covariance_ex(cov, ridge_scale);
    c.covariance = std::move(reg.covariance);
    c.input_pd = reg.input_positive_definite;
    return c;
}

void check_m_step_inputs(const Eigen::Ref<const Matrix>& data, const Responsibilities& resp) {
    if (data.rows() < 1) throw ContractError("m_step needs at least one data point");
    if (resp.values.rows() != data.rows())
        throw ContractError("responsibilities have " + std::to_string(resp.values.rows()) + " rows, data has " +
                            std::to_string(data.rows()));
    if (resp.values.cols() < 1) throw ContractError("responsibilities need at least one component");
    require_finite(data, "data");
    require_finite(resp.values, "responsibilities");
}

// M-step that keeps components without mass at their previous parameters.
GmmModel m_step_keep_previous(const Eigen::Ref<const Matrix>& data, const Responsibilities& resp,
                              const GmmModel& previous, const MStepOptions& options) {
    check_m_step_inputs(data, resp);
    const Eigen::VectorXd masses = resp.values.colwise().sum().transpose();
    const auto kk = resp.values.cols();

    double retained_weight = 0.0;
    std::vector<bool> starved(static_cast<std::size_t>(kk), false);
    for (Eigen::Index k = 0; k < kk; ++k) {
        if (masses(k) <= options.min_component_mass) {
            starved[static_cast<std::size_t>(k)] = true;
            retained_weight += previous.component(static_cast<std::size_t>(k)).weight;
        }
    }
    if (retained_weight >= 1.0) throw DegenerateComponentError(0, 0.0);
    double active_mass = 0.0;
    for (Eigen::Index k = 0; k < kk; ++k)
        if (!starved[static_cast<std::size_t>(k)]) active_mass += masses(k);

    std::vector<GaussianComponent> comps;
    FitInfo info;
    for (Eigen::Index k = 0; k < kk; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        if (starved[uk]) {
            comps.push_back(previous.component(uk));
            continue;
        }
        auto est = estimate_component(data, resp.values.col(k), masses(k), options.ridge_scale);
        info.regularization_applied |= !est.input_pd;
        comps.push_back({(masses(k) / active_mass) * (1.0 - retained_weight), std::move(est.mean),
                         std::move(est.covariance)});
    }
    return GmmModel(std::move(comps), std::move(info));
}

}  // namespace

GmmModel m_step(const Eigen::Ref<const Matrix>& data, const Responsibilities& resp, const MStepOptions& options) {
    check_m_step_inputs(data, resp);
    const Eigen::VectorXd masses = resp.values.colwise().sum().transpose();
    const double total = masses.sum();

    std::vector<GaussianComponent> comps;
    FitInfo info;
    for (Eigen::Index k = 0; k < resp.values.cols(); ++k) {
        if (masses(k) <= options.min_component_mass)
            throw DegenerateComponentError(static_cast<std::size_t>(k), masses(k));
        auto est = estimate_component(data, resp.values.col(k), masses(k), options.ridge_scale);
        info.regularization_applied |= !est.input_pd;
        comps.push_back({masses(k) / total, std::move(est.mean), std::move(est.covariance)});
    }
    return GmmModel(std::move(comps), std::move(info));
}

GmmModel initialize(const Eigen::Ref<const Matrix>& data, std::size_t k, InitStrategy init, std::uint64_t seed,
                    double ridge_scale) {
    const auto n = static_cast<std::size_t>(data.rows());
    if (k < 1 || n < k)
        throw ContractError("need N >= k >= 1, got N=" + std::to_string(n) + ", k=" + std::to_string(k));
    require_finite(data, "data");

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> picks;
    if (init == InitStrategy::random_points) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        std::sample(all.begin(), all.end(), std::back_inserter(picks), static_cast<std::ptrdiff_t>(k), rng);
        std::shuffle(picks.begin(), picks.end(), rng);
    } else {
        std::uniform_int_distribution<std::size_t> first(0, n - 1);
        picks.push_back(first(rng));
        Eigen::VectorXd d2 = (data.rowwise() - data.row(static_cast<Eigen::Index>(picks[0])))
                                 .rowwise()
                                 .squaredNorm();
        while (picks.size() < k) {
            for (std::size_t p : picks) d2(static_cast<Eigen::Index>(p)) = 0.0;
            std::size_t next = 0;
            const double total = d2.sum();
            if (total > 0.0) {
                std::uniform_real_distribution<double> u(0.0, total);
                double target = u(rng);
                for (next = 0; next + 1 < n; ++next) {
                    target -= d2(static_cast<Eigen::Index>(next));
                    if (target < 0.0 && d2(static_cast<Eigen::Index>(next)) > 0.0) break;
                }
            } else {
                std::vector<std::size_t> unused;
                for (std::size_t i = 0; i < n; ++i)
                    if (std::find(picks.begin(), picks.end(), i) == picks.end()) unused.push_back(i);
                std::uniform_int_distribution<std::size_t> pick(0, unused.size() - 1);
                next = unused[pick(rng)];
            }
            picks.push_back(next);
            const Eigen::VectorXd dn =
                (data.rowwise() - data.row(static_cast<Eigen::Index>(next))).rowwise().squaredNorm();
            d2 = d2.cwiseMin(dn);
        }
    }

    const Vector mean = data.colwise().mean().transpose();
    const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
    const Vector var = (data.rowwise() - mean.transpose()).colwise().squaredNorm().transpose() / denom;
    const Matrix cov = regularize_covariance(Matrix(var.asDiagonal()), ridge_scale);

    std::vector<GaussianComponent> comps;
    for (std::size_t p : picks)
        comps.push_back({1.0 / static_cast<double>(k), data.row(static_cast<Eigen::Index>(p)).transpose(), cov});
    return GmmModel(std::move(comps));
}

namespace {

GmmModel run_em(const Eigen::Ref<const Matrix>& data, GmmModel model, const FitOptions& options,
                std::size_t restarts) {
    MStepOptions m_opts{options.ridge_scale, options.min_component_mass};
    if (options.require_full_rank_support && model.num_components() > 1)
        m_opts.min_component_mass = std::max(m_opts.min_component_mass, static_cast<double>(model.dim()) + 1.0);
    FitInfo info;
    info.restarts = restarts;
    double previous = 0.0;

    for (std::size_t it = 1; it <= options.max_iter; ++it) {
        auto [resp, ll] = e_step(model, data);
        info.log_likelihood_trace.push_back(ll);
        info.iterations = it;
        info.final_log_likelihood = ll;
        if (it > 1) {
            const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
            if (std::abs(ll - previous) <= options.rel_tol * scale) {
                info.converged = true;
                return GmmModel(model.components(), std::move(info));
            }
        }
        GmmModel next = options.on_degenerate == DegeneratePolicy::keep_previous
                            ? m_step_keep_previous(data, resp, model, m_opts)
                            : m_step(data, resp, m_opts);
        info.regularization_applied |= next.fit_info().regularization_applied;
        model = std::move(next);
        previous = ll;
    }

    const double ll = e_step(model, data).total_log_likelihood;
    info.log_likelihood_trace.push_back(ll);
    info.final_log_likelihood = ll;
    return GmmModel(model.components(), std::move(info));
}

}  // namespace

GmmModel fit(const Eigen::Ref<const Matrix>& data, std::size_t k, const FitOptions& options,
             const std::optional<GmmModel>& warm_start) {
    const auto n = static_cast<std::size_t>(data.rows());
    if (k < 1 || n < k)
        throw ContractError("need N >= k >= 1, got N=" + std::to_string(n) + ", k=" + std::to_string(k));
    if (options.max_iter < 1) throw ContractError("max_iter must be at least 1");
    require_finite(data, "data");
    if (warm_start) {
        if (warm_start->num_components() != k)
            throw ContractError("warm start has " + std::to_string(warm_start->num_components()) +
                                " components, expected " + std::to_string(k));
        if (warm_start->dim() != static_cast<std::size_t>(data.cols()))
            throw ContractError("warm start dimension " + std::to_string(warm_start->dim()) +
                                " does not match data (" + std::to_string(data.cols()) + ")");
    }

    std::uint64_t init_seed = options.seed;
    std::size_t restarts = 0;
    GmmModel start = warm_start ? *warm_start
                                : initialize(data, k, options.init, init_seed, options.ridge_scale);
    while (true) {
        try {
            return run_em(data, start, options, restarts);
        } catch (const DegenerateComponentError& e) {
            if (restarts >= options.max_restarts)
                throw FitError(std::string("EM failed after ") + std::to_string(restarts) +
                               " restarts: " + e.what());
            ++restarts;
            // Restarts draw a fresh initialization from a derived seed.
            init_seed = options.seed + 0x9e3779b97f4a7c15ULL * restarts;
            start = initialize(data, k, options.init, init_seed, options.ridge_scale);
        }
    }
}

}  // namespace physec
