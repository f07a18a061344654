#pragma once

#include "physec/auth.hpp"
#include "physec/baseline.hpp"
#include "physec/channel.hpp"
#include "physec/format.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace physec {

struct StreamSeeds {
    std::uint64_t bob_link = 1;
    std::uint64_t eve_link = 2;
    std::uint64_t noise = 3;
    std::uint64_t attack = 4;
};

enum class DetectorKind { gmm, mse };

std::string_view to_string(DetectorKind kind) noexcept;

struct ExperimentConfig {
    std::size_t m_subcarriers = 48;
    std::size_t block_size = 1000;
    std::size_t num_test_blocks = 99;
    double attack_intensity = 0.5;
    double snr_db = 20.0;
    ChannelProfile profile;
    StreamSeeds seeds;
    /// GMM posterior thresholds; empty means default_threshold_grid().
    std::vector<double> threshold_grid;
    /// Number of distance quantiles used as MSE thresholds.
    std::size_t mse_grid_points = 513;
    MseUpdateRule mse_rule = MseUpdateRule::frozen;
    /// Detector settings; block_size and threshold are taken from this config.
    AuthOptions auth;
};

/// Throws ConfigError naming the first invalid field.
void validate(const ExperimentConfig& config);

/// `points` values uniform on [0, 1].
std::vector<double> default_threshold_grid(std::size_t points = 513);

/// Block 0 is Bob's training block; test blocks are numbered 1..num_test_blocks.
struct MessageStream {
    std::vector<MessageRecord> training;
    std::vector<MessageRecord> test;

    std::vector<ChannelEstimate> training_estimates() const;
    std::size_t dim() const noexcept;
};

/// Deterministic in the config: training is block_size Bob messages, then every
/// test message is Eve's with probability attack_intensity.
MessageStream build_stream(const ExperimentConfig& config);

/// Splits a loaded trace: block 0 trains, every other record is test traffic.
MessageStream stream_from_records(std::vector<MessageRecord> records);

/// Keeps m equally spaced columns (0, stride, 2*stride, ...) of every estimate.
MessageStream subsample_stream(const MessageStream& stream, std::size_t m);

struct ConfusionCounts {
    std::size_t true_detections = 0;    ///< Eve flagged
    std::size_t missed_detections = 0;  ///< Eve accepted
    std::size_t false_alarms = 0;       ///< Bob flagged
    std::size_t correct_accepts = 0;    ///< Bob accepted

    std::size_t eve_total() const noexcept { return true_detections + missed_detections; }
    std::size_t bob_total() const noexcept { return false_alarms + correct_accepts; }
    /// 0 when there are no Eve messages.
    double p_d() const noexcept;
    /// 0 when there are no Bob messages.
    double p_fa() const noexcept;

    bool operator==(const ConfusionCounts&) const = default;
};

struct RocPoint {
    double threshold = 0.0;
    double p_fa = 0.0;
    double p_d = 0.0;
    ConfusionCounts counts;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Per-message detector output for one pass over the test stream. For GMM the
/// score is the Bob posterior (flag when score < threshold); for MSE it is the
/// distance (flag when score > threshold).
struct ScoredStream {
    DetectorKind kind = DetectorKind::gmm;
    std::vector<double> scores;
    std::vector<Sender> labels;
    std::vector<AuthDecision> decisions;
    /// Detector state after the last message.
    std::optional<Authenticator> final_gmm;
    std::optional<MseDetector> final_mse;
};

/// Trains the detector on the training block and streams every test record
/// through classify at the given threshold (GMM block updates included).
ScoredStream score_stream(const MessageStream& stream, const ExperimentConfig& config, DetectorKind kind,
                          double threshold);

/// Decision rule applied to a stored score.
bool flags_eve(DetectorKind kind, double score, double threshold) noexcept;
ConfusionCounts count_at(const ScoredStream& scored, double threshold);
ConfusionCounts tally(const ScoredStream& scored);

ConfusionCounts run_experiment(const MessageStream& stream, const ExperimentConfig& config, DetectorKind kind,
                               double threshold);
ConfusionCounts run_experiment(const ExperimentConfig& config, DetectorKind kind, double threshold);

/// Trapezoid area under (p_fa, p_d); points must already be sorted.
double trapezoid_auc(std::span<const RocPoint> points);

/// Adds the accept-all and flag-all endpoints for the given label totals, sorts
/// by (p_fa, p_d) and computes the AUC.
RocCurve finish_roc(DetectorKind kind, std::vector<RocPoint> points, std::size_t bob_total, std::size_t eve_total);

/// Counts the stored scores at every threshold, then finish_roc().
RocCurve make_roc(DetectorKind kind, const ScoredStream& scored, std::span<const double> thresholds);

/// Thresholds swept for a detector: the config grid for GMM, distance quantiles for MSE.
std::vector<double> sweep_thresholds(const ExperimentConfig& config, DetectorKind kind, const ScoredStream& scored);

/// Runs the sweep on one shared stream. Detectors whose state does not depend on
/// their own verdicts are scored once; the others are rerun per threshold.
/// `base_out` receives the pass used for scoring and threshold selection.
RocCurve sweep_roc(const MessageStream& stream, const ExperimentConfig& config, DetectorKind kind,
                   ScoredStream* base_out = nullptr);
RocCurve sweep_roc(const ExperimentConfig& config, DetectorKind kind);

/// Point with the largest p_fa not exceeding target_p_fa (highest p_d among ties).
RocPoint operating_point(const RocCurve& curve, double target_p_fa);

/// Point whose realized p_fa is closest to target_p_fa (highest p_d among ties).
RocPoint nearest_operating_point(const RocCurve& curve, double target_p_fa);

// ROC CSV: threshold,p_fa,p_d,tp,fn,fp,tn
std::string roc_csv(const RocCurve& curve);
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const RocPoint& point);

}  // namespace physec
