#include "physec/auth.hpp"

#include "json_fields.hpp"
#include "physec/atomic_file.hpp"
#include "physec/error.hpp"
#include "physec/gmm_io.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace physec {

void validate(const AuthOptions& o) {
    if (o.block_size < 2) throw ConfigError("block_size", "must be at least 2");
    if (!(o.threshold >= 0.0 && o.threshold <= 1.0)) throw ConfigError("threshold", "must lie in [0, 1]");
    if (!(o.background_scale > 1.0) || !std::isfinite(o.background_scale))
        throw ConfigError("background_scale", "must be a finite number greater than 1");
    if (!(o.background_weight > 0.0 && o.background_weight < 1.0))
        throw ConfigError("background_weight", "must lie in (0, 1)");
    if (!(o.fit.rel_tol > 0.0)) throw ConfigError("rel_tol", "must be positive");
    if (o.fit.max_iter < 1) throw ConfigError("max_iter", "must be at least 1");
    if (!(o.fit.ridge_scale >= 0.0)) throw ConfigError("ridge_scale", "must be non-negative");
}

Matrix feature_matrix(std::span<const ChannelEstimate> estimates, bool row_standardize) {
    if (estimates.empty()) return Matrix(0, 0);
    const std::size_t dim = estimates.front().size();
    Matrix out(static_cast<Eigen::Index>(estimates.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        validate(estimates[i]);
        if (estimates[i].size() != dim)
            throw ContractError("estimate " + std::to_string(i) + " has length " +
                                std::to_string(estimates[i].size()) + ", expected " + std::to_string(dim));
        auto row = out.row(static_cast<Eigen::Index>(i));
        for (std::size_t l = 0; l < dim; ++l) row(static_cast<Eigen::Index>(l)) = estimates[i].gains[l];
        if (row_standardize) {
            const double mean = row.mean();
            row.array() -= mean;
            const double sd = std::sqrt(row.squaredNorm() / static_cast<double>(dim));
            if (sd > 0.0) row /= sd;
        }
    }
    return out;
}

std::size_t majority_component(const Responsibilities& resp, const GmmModel& model) {
    const auto k = resp.values.cols();
    if (static_cast<std::size_t>(k) != model.num_components())
        throw ContractError("responsibilities do not match the model's component count");
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < resp.values.rows(); ++i) {
        Eigen::Index best = 0;
        resp.values.row(i).maxCoeff(&best);
        ++counts[static_cast<std::size_t>(best)];
    }
    std::size_t winner = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
        if (counts[c] > counts[winner] ||
            (counts[c] == counts[winner] && model.component(c).weight > model.component(winner).weight))
            winner = c;
    }
    return winner;
}

std::size_t nearest_component(const GmmModel& model, const Eigen::Ref<const Vector>& reference) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < model.num_components(); ++c) {
        const double d = (model.component(c).mean - reference).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

namespace {

GmmModel anchored_model(const Eigen::Ref<const Matrix>& data, const AuthOptions& options) {
    const GmmModel single = fit(data, 1, options.fit);
    const auto& bob = single.component(0);
    GaussianComponent background{options.background_weight, bob.mean, options.background_scale * bob.covariance};
    GaussianComponent anchored{1.0 - options.background_weight, bob.mean, bob.covariance};
    return GmmModel({std::move(anchored), std::move(background)}, single.fit_info());
}

}  // namespace

Authenticator Authenticator::train_initial(std::span<const ChannelEstimate> training, const AuthOptions& options) {
    validate(options);
    if (training.size() < 2)
        throw ContractError("training needs at least 2 estimates, got " + std::to_string(training.size()));
    const Matrix data = feature_matrix(training, options.row_standardize);

    GmmModel model = options.training == TrainingMode::anchored_background ? anchored_model(data, options)
                                                                            : fit(data, 2, options.fit);
    const auto resp = e_step(model, data).resp;
    const std::size_t bob = majority_component(resp, model);
    return Authenticator(std::move(model), bob, options, 1);
}

Authenticator::Authenticator(GmmModel model, std::size_t bob_component, AuthOptions options,
                             std::size_t block_count)
    : model_(std::move(model)), bob_(bob_component), options_(std::move(options)), block_count_(block_count) {
    validate(options_);
    if (bob_ >= model_.num_components())
        throw ContractError("bob_component " + std::to_string(bob_) + " out of range");
}

void Authenticator::set_threshold(double threshold) {
    if (std::isnan(threshold)) throw ContractError("threshold is NaN");
    options_.threshold = std::clamp(threshold, 0.0, 1.0);
}

Vector Authenticator::features(const ChannelEstimate& estimate) const {
    if (estimate.size() != model_.dim())
        throw ContractError("estimate has length " + std::to_string(estimate.size()) + ", model expects " +
                            std::to_string(model_.dim()));
    const Matrix row = feature_matrix(std::span<const ChannelEstimate>(&estimate, 1), options_.row_standardize);
    return row.row(0).transpose();
}

double Authenticator::bob_posterior(const ChannelEstimate& estimate) const {
    const Vector x = features(estimate);
    const Matrix row = x.transpose();
    const auto result = e_step(model_, row);
    return std::clamp(result.resp.values(0, static_cast<Eigen::Index>(bob_)), 0.0, 1.0);
}

AuthDecision Authenticator::score(const ChannelEstimate& estimate) const {
    AuthDecision d;
    d.bob_posterior = bob_posterior(estimate);
    d.threshold_used = options_.threshold;
    d.verdict = d.bob_posterior >= d.threshold_used ? Verdict::AcceptBob : Verdict::FlagEve;
    return d;
}

AuthDecision Authenticator::classify(const ChannelEstimate& estimate) {
    const AuthDecision d = score(estimate);
    buffer_.push_back(estimate);
    buffer_accepted_.push_back(d.accepted());
    if (buffer_.size() >= options_.block_size) update_block();
    return d;
}

void Authenticator::update_block() {
    if (buffer_.size() != options_.block_size)
        throw ContractError("update_block needs a full buffer of " + std::to_string(options_.block_size) +
                            " estimates, have " + std::to_string(buffer_.size()));

    std::vector<ChannelEstimate> selected;
    if (options_.refit == RefitMode::accepted_only) {
        for (std::size_t i = 0; i < buffer_.size(); ++i)
            if (buffer_accepted_[i]) selected.push_back(buffer_[i]);
    }
    const std::span<const ChannelEstimate> block =
        options_.refit == RefitMode::accepted_only ? std::span<const ChannelEstimate>(selected)
                                                   : std::span<const ChannelEstimate>(buffer_);

    std::optional<GmmModel> refit;
    std::size_t bob = bob_;
    // Too few estimates to refit a two-component model: the block carries no update.
    if (block.size() >= model_.num_components()) {
        FitOptions fo = options_.fit;
        fo.on_degenerate = DegeneratePolicy::keep_previous;
        fo.require_full_rank_support = true;
        try {
            const Matrix data = feature_matrix(block, options_.row_standardize);
            refit = fit(data, model_.num_components(), fo, model_);
        } catch (const FitError& e) {
            throw BlockUpdateError(block_count_, e.what());
        }
        bob = nearest_component(*refit, model_.component(bob_).mean);
    }

    if (refit) model_ = std::move(*refit);
    bob_ = bob;
    buffer_.clear();
    buffer_accepted_.clear();
    ++block_count_;
}

void Authenticator::discard_buffer() {
    buffer_.clear();
    buffer_accepted_.clear();
}

nlohmann::json to_json(const Authenticator& state) {
    const auto& o = state.options();
    return {{"model", to_json(state.model())},
            {"bob_component", state.bob_component()},
            {"threshold", state.threshold()},
            {"block_size", state.block_size()},
            {"block_count", state.block_count()},
            {"refit_mode", o.refit == RefitMode::all ? "all" : "accepted_only"},
            {"row_standardize", o.row_standardize}};
}

Authenticator authenticator_from_json(const nlohmann::json& j) {
    using detail::field;
    GmmModel model = gmm_from_json(detail::object_field(j, "model"));
    AuthOptions options;
    const auto bob = field<std::size_t>(j, "bob_component");
    options.threshold = field<double>(j, "threshold");
    options.block_size = field<std::size_t>(j, "block_size");
    const auto block_count = field<std::size_t>(j, "block_count");
    if (j.contains("refit_mode")) {
        const auto mode = field<std::string>(j, "refit_mode");
        if (mode == "all") {
            options.refit = RefitMode::all;
        } else if (mode == "accepted_only") {
            options.refit = RefitMode::accepted_only;
        } else {
            throw ParseError("invalid value for key 'refit_mode'");
        }
    }
    if (j.contains("row_standardize")) options.row_standardize = field<bool>(j, "row_standardize");
    if (!(options.threshold >= 0.0 && options.threshold <= 1.0))
        throw ParseError("invalid value for key 'threshold'");
    if (bob >= model.num_components()) throw ParseError("invalid value for key 'bob_component'");
    try {
        return Authenticator(std::move(model), bob, options, block_count);
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what());
    }
}

void save_state(const std::filesystem::path& path, const Authenticator& state) {
    write_file_atomic(path, to_json(state).dump(2) + "\n");
}

Authenticator load_state(const std::filesystem::path& path) {
    return authenticator_from_json(read_json_file(path));
}

}  // namespace physec
