#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace physec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct GaussianComponent {
    double weight = 0.0;
    Vector mean;
    Matrix covariance;
};

struct FitInfo {
    std::size_t iterations = 0;
    double final_log_likelihood = -std::numeric_limits<double>::infinity();
    bool converged = false;
    /// Some covariance was not positive definite before the ridge was added.
    bool regularization_applied = false;
    std::size_t restarts = 0;
    /// Total log-likelihood at every E-step, in order.
    std::vector<double> log_likelihood_trace;
};

/// K-component Gaussian mixture with full covariances. Immutable once built;
/// the Cholesky factor of every covariance is cached for density evaluation.
class GmmModel {
public:
    /// Throws ContractError on inconsistent dimensions, weights outside [0,1],
    /// weights not summing to 1 (1e-9), or covariances that are not symmetric
    /// positive definite. Weights are renormalized and covariances stored
    /// exactly symmetric.
    explicit GmmModel(std::vector<GaussianComponent> components, FitInfo info = {});

    std::size_t dim() const noexcept { return dim_; }
    std::size_t num_components() const noexcept { return components_.size(); }
    const std::vector<GaussianComponent>& components() const noexcept { return components_; }
    const GaussianComponent& component(std::size_t k) const { return components_.at(k); }
    const FitInfo& fit_info() const noexcept { return info_; }

    /// log N(x | mu_k, Sigma_k), without the mixing weight.
    double component_log_density(std::size_t k, const Eigen::Ref<const Vector>& x) const;

    /// N x K matrix of log(pi_k) + log N(x_i | mu_k, Sigma_k). Rows of `data` are points.
    Matrix weighted_log_densities(const Eigen::Ref<const Matrix>& data) const;

private:
    std::vector<GaussianComponent> components_;
    std::vector<Eigen::LLT<Matrix>> factors_;
    std::vector<double> log_dets_;
    std::size_t dim_ = 0;
    FitInfo info_;
};

/// Row-stochastic N x K posterior matrix.
struct Responsibilities {
    Matrix values;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

struct EStepResult {
    Responsibilities resp;
    double total_log_likelihood = 0.0;
};

/// log sum_k pi_k N(x | mu_k, Sigma_k), evaluated with log-sum-exp.
double log_density(const GmmModel& model, const Eigen::Ref<const Vector>& x);

/// Posterior responsibilities of every row of `data`.
EStepResult e_step(const GmmModel& model, const Eigen::Ref<const Matrix>& data);

struct RegularizedCovariance {
    Matrix covariance;
    double epsilon = 0.0;
    bool input_positive_definite = true;
};

inline constexpr double kDefaultRidgeScale = 1e-6;
inline constexpr double kMinRidge = 1e-10;

/// sigma + eps * I with eps = max(ridge_scale * trace(sigma) / M, 1e-10). If the
/// result still fails a Cholesky factorization eps grows tenfold until it passes.
RegularizedCovariance regularize_covariance_ex(const Eigen::Ref<const Matrix>& sigma, double ridge_scale);
Matrix regularize_covariance(const Eigen::Ref<const Matrix>& sigma, double ridge_scale);

struct MStepOptions {
    double ridge_scale = kDefaultRidgeScale;
    /// Components whose responsibility mass is at or below this are degenerate.
    double min_component_mass = 1e-10;
};

/// Weights, means and covariances re-estimated from the responsibilities.
/// The covariance is taken around the updated mean. Throws
/// DegenerateComponentError for a component without responsibility mass.
GmmModel m_step(const Eigen::Ref<const Matrix>& data, const Responsibilities& resp,
                const MStepOptions& options = {});

enum class InitStrategy {
    random_points,  ///< k distinct data points chosen uniformly as means
    kmeans_pp,      ///< D^2-weighted seeding of the means
};

enum class DegeneratePolicy {
    reinitialize,   ///< restart from a fresh initialization, up to max_restarts times
    keep_previous,  ///< freeze the starved component at its previous parameters
};

struct FitOptions {
    InitStrategy init = InitStrategy::random_points;
    std::uint64_t seed = 0;
    double rel_tol = 1e-6;
    std::size_t max_iter = 200;
    double ridge_scale = kDefaultRidgeScale;
    std::size_t max_restarts = 5;
    double min_component_mass = 1e-10;
    /// With k >= 2, a component holding no more than dim + 1 points of
    /// responsibility mass is treated as degenerate: its full covariance would
    /// be singular and the likelihood unbounded.
    bool require_full_rank_support = true;
    DegeneratePolicy on_degenerate = DegeneratePolicy::reinitialize;
};

/// Initial parameters per the chosen strategy: means from data points,
/// diagonal covariance from per-dimension sample variance, uniform weights.
GmmModel initialize(const Eigen::Ref<const Matrix>& data, std::size_t k, InitStrategy init,
                    std::uint64_t seed, double ridge_scale = kDefaultRidgeScale);

/// EM until the relative log-likelihood change drops below rel_tol or max_iter
/// is reached. `warm_start` replaces the initialization.
GmmModel fit(const Eigen::Ref<const Matrix>& data, std::size_t k, const FitOptions& options = {},
             const std::optional<GmmModel>& warm_start = std::nullopt);

}  // namespace physec
