#pragma once

#include "physec/channel.hpp"
#include "physec/decision.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace physec {

enum class MseUpdateRule { frozen, running_mean_accepted };

/// (1/M) * sum_l (reference_l - gain_l)^2
double mse_distance(std::span<const double> reference, const ChannelEstimate& estimate);

/// Reference-vector detector: accept when the mean squared distance to the
/// reference is within the threshold.
class MseDetector {
public:
    MseDetector(std::vector<double> reference, double threshold, MseUpdateRule rule = MseUpdateRule::frozen,
                std::size_t support = 1);

    /// Reference = element-wise mean of the training block.
    static MseDetector train(std::span<const ChannelEstimate> training, double threshold,
                             MseUpdateRule rule = MseUpdateRule::frozen);

    /// Under running_mean_accepted, an accepted estimate is folded into the reference.
    AuthDecision classify(const ChannelEstimate& estimate);
    AuthDecision score(const ChannelEstimate& estimate) const;

    const std::vector<double>& reference() const noexcept { return reference_; }
    double threshold() const noexcept { return threshold_; }
    void set_threshold(double threshold);
    MseUpdateRule update_rule() const noexcept { return rule_; }
    /// Number of estimates averaged into the reference.
    std::size_t support() const noexcept { return support_; }

private:
    std::vector<double> reference_;
    double threshold_;
    MseUpdateRule rule_;
    std::size_t support_;
};

/// Score reported in AuthDecision::bob_posterior for an MSE value.
inline double mse_score(double mse) { return 1.0 / (1.0 + mse); }

// {"reference": [...], "threshold", "update_rule": "frozen" | "running_mean_accepted", "support"}
nlohmann::json to_json(const MseDetector& detector);
MseDetector mse_detector_from_json(const nlohmann::json& j);

}  // namespace physec
