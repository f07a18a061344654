#pragma once

#include "physec/channel.hpp"
#include "physec/decision.hpp"
#include "physec/gmm.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace physec {

enum class TrainingMode {
    /// Bob's component is the ML Gaussian of the training block; the second
    /// component starts as a wide background around it.
    anchored_background,
    /// Plain two-component EM on the training block, Bob = majority component.
    mixture_em,
};

enum class RefitMode {
    all,            ///< refit on every buffered estimate
    accepted_only,  ///< refit only on estimates that were accepted as Bob
};

struct AuthOptions {
    std::size_t block_size = 1000;
    double threshold = 0.5;
    FitOptions fit;
    TrainingMode training = TrainingMode::anchored_background;
    /// Background covariance = background_scale * Bob covariance.
    double background_scale = 100.0;
    double background_weight = 0.5;
    RefitMode refit = RefitMode::all;
    /// Center and scale every estimate by its own mean and standard deviation.
    bool row_standardize = false;
};

void validate(const AuthOptions& options);

/// Feature rows for a batch of estimates. All estimates must share one length.
Matrix feature_matrix(std::span<const ChannelEstimate> estimates, bool row_standardize);

/// Component holding most hard (argmax) assignments. Ties go to the larger
/// mixing weight, then to the lower index.
std::size_t majority_component(const Responsibilities& resp, const GmmModel& model);

/// Index of the component whose mean is closest (Euclidean) to `reference`.
std::size_t nearest_component(const GmmModel& model, const Eigen::Ref<const Vector>& reference);

/// Online transmitter authentication: one two-component mixture, a Bob
/// component, a posterior threshold and a block buffer that triggers a
/// warm-started refit every block_size messages. Not thread-safe; score()
/// is const and may be called concurrently on a shared snapshot.
class Authenticator {
public:
    /// Fits the initial model on Bob's training messages. block_count() starts at 1.
    static Authenticator train_initial(std::span<const ChannelEstimate> training, const AuthOptions& options);

    /// Rebuilds a state from a stored model (empty buffer).
    Authenticator(GmmModel model, std::size_t bob_component, AuthOptions options, std::size_t block_count = 1);

    /// Scores the estimate, buffers it, and refits once the buffer holds a full block.
    /// A failed refit throws BlockUpdateError with the buffer still full.
    AuthDecision classify(const ChannelEstimate& estimate);

    /// Decision without touching the buffer.
    AuthDecision score(const ChannelEstimate& estimate) const;
    double bob_posterior(const ChannelEstimate& estimate) const;

    /// Refits on the buffered block, warm-started from the current model.
    /// Throws ContractError unless the buffer is full; on fit failure throws
    /// BlockUpdateError and leaves the state unchanged.
    void update_block();

    /// Drops the buffered block without refitting.
    void discard_buffer();

    const GmmModel& model() const noexcept { return model_; }
    std::size_t bob_component() const noexcept { return bob_; }
    double threshold() const noexcept { return options_.threshold; }
    /// Clamped to [0, 1].
    void set_threshold(double threshold);
    std::size_t block_size() const noexcept { return options_.block_size; }
    std::size_t block_count() const noexcept { return block_count_; }
    std::size_t buffered() const noexcept { return buffer_.size(); }
    std::size_t dim() const noexcept { return model_.dim(); }
    const AuthOptions& options() const noexcept { return options_; }

private:
    Vector features(const ChannelEstimate& estimate) const;

    GmmModel model_;
    std::size_t bob_ = 0;
    AuthOptions options_;
    std::size_t block_count_ = 1;
    std::vector<ChannelEstimate> buffer_;
    std::vector<bool> buffer_accepted_;
};

// {"model": <gmm snapshot>, "bob_component", "threshold", "block_size", "block_count",
//  "refit_mode", "row_standardize"}
nlohmann::json to_json(const Authenticator& state);
Authenticator authenticator_from_json(const nlohmann::json& j);

void save_state(const std::filesystem::path& path, const Authenticator& state);
Authenticator load_state(const std::filesystem::path& path);

}  // namespace physec
