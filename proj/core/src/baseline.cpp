#include "physec/baseline.hpp"

#include "json_fields.hpp"
#include "physec/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace physec {

double mse_distance(std::span<const double> reference, const ChannelEstimate& estimate) {
    if (reference.size() != estimate.gains.size())
        throw ContractError("reference has length " + std::to_string(reference.size()) + ", estimate has " +
                            std::to_string(estimate.gains.size()));
    if (reference.empty()) throw ContractError("mse_distance of empty vectors");
    double acc = 0.0;
    for (std::size_t l = 0; l < reference.size(); ++l) {
        const double d = reference[l] - estimate.gains[l];
        acc += d * d;
    }
    return acc / static_cast<double>(reference.size());
}

MseDetector::MseDetector(std::vector<double> reference, double threshold, MseUpdateRule rule, std::size_t support)
    : reference_(std::move(reference)), threshold_(0.0), rule_(rule), support_(support) {
    if (reference_.empty()) throw ContractError("MSE reference must not be empty");
    for (double r : reference_)
        if (!std::isfinite(r)) throw ContractError("MSE reference contains non-finite values");
    if (support_ == 0) throw ContractError("MSE reference support must be positive");
    set_threshold(threshold);
}

MseDetector MseDetector::train(std::span<const ChannelEstimate> training, double threshold, MseUpdateRule rule) {
    if (training.empty()) throw ContractError("MSE training block is empty");
    const std::size_t dim = training.front().size();
    std::vector<double> mean(dim, 0.0);
    for (const auto& e : training) {
        validate(e);
        if (e.size() != dim) throw ContractError("training estimates must share one length");
        for (std::size_t l = 0; l < dim; ++l) mean[l] += e.gains[l];
    }
    for (double& m : mean) m /= static_cast<double>(training.size());
    return MseDetector(std::move(mean), threshold, rule, training.size());
}

void MseDetector::set_threshold(double threshold) {
    if (!(threshold >= 0.0)) throw ContractError("MSE threshold must be non-negative");
    threshold_ = threshold;
}

AuthDecision MseDetector::score(const ChannelEstimate& estimate) const {
    const double mse = mse_distance(reference_, estimate);
    AuthDecision d;
    d.bob_posterior = mse_score(mse);
    d.threshold_used = threshold_;
    d.verdict = mse <= threshold_ ? Verdict::AcceptBob : Verdict::FlagEve;
    return d;
}

AuthDecision MseDetector::classify(const ChannelEstimate& estimate) {
    const AuthDecision d = score(estimate);
    if (rule_ == MseUpdateRule::running_mean_accepted && d.accepted()) {
        ++support_;
        const double n = static_cast<double>(support_);
        for (std::size_t l = 0; l < reference_.size(); ++l)
            reference_[l] += (estimate.gains[l] - reference_[l]) / n;
    }
    return d;
}

nlohmann::json to_json(const MseDetector& detector) {
    nlohmann::json j = {{"reference", detector.reference()},
                        {"update_rule", detector.update_rule() == MseUpdateRule::frozen ? "frozen"
                                                                                        : "running_mean_accepted"},
                        {"support", detector.support()}};
    // JSON has no infinity; an unbounded threshold is stored as null.
    if (std::isinf(detector.threshold())) {
        j["threshold"] = nullptr;
    } else {
        j["threshold"] = detector.threshold();
    }
    return j;
}

MseDetector mse_detector_from_json(const nlohmann::json& j) {
    using detail::field;
    auto reference = field<std::vector<double>>(j, "reference");
    const auto& th = detail::object_field(j, "threshold");
    const double threshold = th.is_null() ? std::numeric_limits<double>::infinity() : field<double>(j, "threshold");
    MseUpdateRule rule = MseUpdateRule::frozen;
    if (j.contains("update_rule")) {
        const auto name = field<std::string>(j, "update_rule");
        if (name == "frozen") {
            rule = MseUpdateRule::frozen;
        } else if (name == "running_mean_accepted") {
            rule = MseUpdateRule::running_mean_accepted;
        } else {
            throw ParseError("invalid value for key 'update_rule'");
        }
    }
    const std::size_t support = j.contains("support") ? field<std::size_t>(j, "support") : 1;
    try {
        return MseDetector(std::move(reference), threshold, rule, support);
    } catch (const ContractError& e) {
        throw ParseError(e.what());
    }
}

}  // namespace physec
