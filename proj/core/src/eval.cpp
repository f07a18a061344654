#include "physec/eval.hpp"

#include "physec/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace physec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint32_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
    return std::mt19937_64(seq);
}

AuthOptions detector_options(const ExperimentConfig& config, double threshold) {
    AuthOptions a = config.auth;
    a.block_size = config.block_size;
    a.threshold = std::clamp(threshold, 0.0, 1.0);
    return a;
}

}  // namespace

std::string_view to_string(DetectorKind kind) noexcept { return kind == DetectorKind::gmm ? "gmm" : "mse"; }

void validate(const ExperimentConfig& c) {
    validate(c.profile);
    subsample_carriers(c.profile.active_carriers, c.m_subcarriers);
    if (c.block_size < 2) throw ConfigError("block_size", "must be at least 2");
    if (c.num_test_blocks < 1) throw ConfigError("num_test_blocks", "must be at least 1");
    if (!(c.attack_intensity >= 0.0 && c.attack_intensity <= 1.0))
        throw ConfigError("attack_intensity", "must lie in [0, 1]");
    validate(NoiseModel{c.snr_db});
    for (std::size_t i = 0; i < c.threshold_grid.size(); ++i) {
        const double t = c.threshold_grid[i];
        if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("threshold_grid", "values must lie in [0, 1]");
        if (i > 0 && !(t > c.threshold_grid[i - 1]))
            throw ConfigError("threshold_grid", "must be strictly increasing");
    }
    if (c.mse_grid_points < 2) throw ConfigError("mse_grid_points", "must be at least 2");
    validate(detector_options(c, 0.5));
}

std::vector<double> default_threshold_grid(std::size_t points) {
    if (points < 2) throw ConfigError("threshold_points", "must be at least 2");
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = static_cast<double>(i) / static_cast<double>(points - 1);
    return grid;
}

std::vector<ChannelEstimate> MessageStream::training_estimates() const {
    std::vector<ChannelEstimate> out;
    out.reserve(training.size());
    for (const auto& r : training) out.push_back(r.estimate);
    return out;
}

std::size_t MessageStream::dim() const noexcept {
    if (!training.empty()) return training.front().estimate.size();
    if (!test.empty()) return test.front().estimate.size();
    return 0;
}

MessageStream build_stream(const ExperimentConfig& config) {
    validate(config);
    LinkChannel bob(config.profile, config.seeds.bob_link);
    LinkChannel eve(config.profile, config.seeds.eve_link);
    auto noise_rng = stream_rng(config.seeds.noise, 0x6e6f6973);
    auto attack_rng = stream_rng(config.seeds.attack, 0x61747463);
    const NoiseModel noise{config.snr_db};
    std::bernoulli_distribution eve_sends(config.attack_intensity);

    MessageStream s;
    s.training.reserve(config.block_size);
    for (std::size_t i = 0; i < config.block_size; ++i) {
        s.training.push_back({observe_estimate(bob.response(), noise, config.profile, config.m_subcarriers, noise_rng),
                              Sender::Bob, 0, i});
        bob.advance();
    }
    s.test.reserve(config.block_size * config.num_test_blocks);
    for (std::size_t b = 1; b <= config.num_test_blocks; ++b) {
        for (std::size_t i = 0; i < config.block_size; ++i) {
            const Sender sender = eve_sends(attack_rng) ? Sender::Eve : Sender::Bob;
            LinkChannel& link = sender == Sender::Eve ? eve : bob;
            s.test.push_back(
                {observe_estimate(link.response(), noise, config.profile, config.m_subcarriers, noise_rng), sender,
                 b, i});
            link.advance();
        }
    }
    return s;
}

MessageStream stream_from_records(std::vector<MessageRecord> records) {
    MessageStream s;
    for (auto& r : records) (r.block_index == 0 ? s.training : s.test).push_back(std::move(r));
    if (s.training.empty()) throw ContractError("trace has no training block (block_index 0)");
    return s;
}

MessageStream subsample_stream(const MessageStream& stream, std::size_t m) {
    const std::size_t dim = stream.dim();
    const auto columns = subsample_carriers(dim, m);
    auto pick = [&](const MessageRecord& r) {
        if (r.estimate.size() != dim) throw ContractError("stream estimates must share one length");
        MessageRecord out = r;
        out.estimate.gains.clear();
        out.estimate.carrier_indices.clear();
        for (std::size_t c : columns) {
            out.estimate.gains.push_back(r.estimate.gains[c]);
            out.estimate.carrier_indices.push_back(r.estimate.carrier_indices[c]);
        }
        return out;
    };
    MessageStream s;
    s.training.reserve(stream.training.size());
    s.test.reserve(stream.test.size());
    for (const auto& r : stream.training) s.training.push_back(pick(r));
    for (const auto& r : stream.test) s.test.push_back(pick(r));
    return s;
}

double ConfusionCounts::p_d() const noexcept {
    const auto n = eve_total();
    return n ? static_cast<double>(true_detections) / static_cast<double>(n) : 0.0;
}

double ConfusionCounts::p_fa() const noexcept {
    const auto n = bob_total();
    return n ? static_cast<double>(false_alarms) / static_cast<double>(n) : 0.0;
}

bool flags_eve(DetectorKind kind, double score, double threshold) noexcept {
    return kind == DetectorKind::gmm ? score < threshold : score > threshold;
}

ScoredStream score_stream(const MessageStream& stream, const ExperimentConfig& config, DetectorKind kind,
                          double threshold) {
    if (stream.training.empty()) throw ContractError("stream has no training block");
    const auto training = stream.training_estimates();
    const std::size_t dim = stream.dim();
    for (const auto& r : stream.test)
        if (r.estimate.size() != dim)
            throw ContractError("test record has length " + std::to_string(r.estimate.size()) + ", expected " +
                                std::to_string(dim));

    ScoredStream out;
    out.kind = kind;
    out.scores.reserve(stream.test.size());
    out.labels.reserve(stream.test.size());
    out.decisions.reserve(stream.test.size());

    if (kind == DetectorKind::gmm) {
        auto auth = Authenticator::train_initial(training, detector_options(config, threshold));
        for (const auto& r : stream.test) {
            const AuthDecision d = auth.classify(r.estimate);
            out.scores.push_back(d.bob_posterior);
            out.labels.push_back(r.true_sender);
            out.decisions.push_back(d);
        }
        out.final_gmm = std::move(auth);
    } else {
        auto det = MseDetector::train(training, std::max(threshold, 0.0), config.mse_rule);
        for (const auto& r : stream.test) {
            const double mse = mse_distance(det.reference(), r.estimate);
            const AuthDecision d = det.classify(r.estimate);
            out.scores.push_back(mse);
            out.labels.push_back(r.true_sender);
            out.decisions.push_back(d);
        }
        out.final_mse = std::move(det);
    }
    return out;
}

namespace {

void add(ConfusionCounts& c, Sender sender, bool flagged) {
    if (sender == Sender::Eve) {
        ++(flagged ? c.true_detections : c.missed_detections);
    } else {
        ++(flagged ? c.false_alarms : c.correct_accepts);
    }
}

RocPoint make_point(double threshold, const ConfusionCounts& counts) {
    return {threshold, counts.p_fa(), counts.p_d(), counts};
}

}  // namespace

ConfusionCounts count_at(const ScoredStream& scored, double threshold) {
    ConfusionCounts c;
    for (std::size_t i = 0; i < scored.scores.size(); ++i)
        add(c, scored.labels[i], flags_eve(scored.kind, scored.scores[i], threshold));
    return c;
}

ConfusionCounts tally(const ScoredStream& scored) {
    ConfusionCounts c;
    for (std::size_t i = 0; i < scored.decisions.size(); ++i) add(c, scored.labels[i], !scored.decisions[i].accepted());
    return c;
}

ConfusionCounts run_experiment(const MessageStream& stream, const ExperimentConfig& config, DetectorKind kind,
                               double threshold) {
    if (kind == DetectorKind::gmm && !(threshold >= 0.0 && threshold <= 1.0))
        throw ContractError("GMM threshold must lie in [0, 1]");
    if (kind == DetectorKind::mse && !(threshold >= 0.0)) throw ContractError("MSE threshold must be non-negative");
    return tally(score_stream(stream, config, kind, threshold));
}

ConfusionCounts run_experiment(const ExperimentConfig& config, DetectorKind kind, double threshold) {
    return run_experiment(build_stream(config), config, kind, threshold);
}

double trapezoid_auc(std::span<const RocPoint> points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i)
        area += (points[i].p_fa - points[i - 1].p_fa) * (points[i].p_d + points[i - 1].p_d) / 2.0;
    return area;
}

RocCurve finish_roc(DetectorKind kind, std::vector<RocPoint> points, std::size_t bob_total, std::size_t eve_total) {
    ConfusionCounts accept_all;
    accept_all.correct_accepts = bob_total;
    accept_all.missed_detections = eve_total;
    ConfusionCounts flag_all;
    flag_all.false_alarms = bob_total;
    flag_all.true_detections = eve_total;
    if (kind == DetectorKind::gmm) {
        points.push_back(make_point(0.0, accept_all));
        points.push_back(make_point(kInf, flag_all));
    } else {
        points.push_back(make_point(kInf, accept_all));
        points.push_back(make_point(-kInf, flag_all));
    }
    std::stable_sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
        if (a.p_fa != b.p_fa) return a.p_fa < b.p_fa;
        return a.p_d < b.p_d;
    });
    RocCurve curve;
    curve.points = std::move(points);
    curve.auc = trapezoid_auc(curve.points);
    return curve;
}

RocCurve make_roc(DetectorKind kind, const ScoredStream& scored, std::span<const double> thresholds) {
    std::vector<RocPoint> points;
    points.reserve(thresholds.size() + 2);
    for (double t : thresholds) points.push_back(make_point(t, count_at(scored, t)));
    std::size_t bob = 0;
    for (Sender s : scored.labels) bob += s == Sender::Bob;
    return finish_roc(kind, std::move(points), bob, scored.labels.size() - bob);
}

std::vector<double> sweep_thresholds(const ExperimentConfig& config, DetectorKind kind, const ScoredStream& scored) {
    if (kind == DetectorKind::gmm)
        return config.threshold_grid.empty() ? default_threshold_grid() : config.threshold_grid;

    std::vector<double> sorted = scored.scores;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> grid;
    if (sorted.empty()) return grid;
    const std::size_t p = config.mse_grid_points;
    const std::size_t n = sorted.size();
    for (std::size_t q = 0; q < p; ++q) {
        const std::size_t idx = (q * (n - 1) + (p - 1) / 2) / (p - 1);
        const double t = sorted[idx];
        if (grid.empty() || t > grid.back()) grid.push_back(t);
    }
    return grid;
}

RocCurve sweep_roc(const MessageStream& stream, const ExperimentConfig& config, DetectorKind kind,
                   ScoredStream* base_out) {
    const bool self_independent = kind == DetectorKind::gmm ? config.auth.refit == RefitMode::all
                                                            : config.mse_rule == MseUpdateRule::frozen;
    ScoredStream base = score_stream(stream, config, kind, kind == DetectorKind::gmm ? 0.5 : kInf);
    const auto thresholds = sweep_thresholds(config, kind, base);
    if (thresholds.empty()) throw ContractError("threshold grid is empty");
    if (self_independent) {
        RocCurve curve = make_roc(kind, base, thresholds);
        if (base_out) *base_out = std::move(base);
        return curve;
    }

    std::vector<RocPoint> points;
    points.reserve(thresholds.size() + 2);
    for (double t : thresholds) points.push_back(make_point(t, tally(score_stream(stream, config, kind, t))));
    std::size_t bob = 0;
    for (Sender s : base.labels) bob += s == Sender::Bob;
    const std::size_t total = base.labels.size();
    if (base_out) *base_out = std::move(base);
    return finish_roc(kind, std::move(points), bob, total - bob);
}

RocCurve sweep_roc(const ExperimentConfig& config, DetectorKind kind) {
    return sweep_roc(build_stream(config), config, kind);
}

RocPoint operating_point(const RocCurve& curve, double target_p_fa) {
    if (curve.points.empty()) throw ContractError("operating_point on an empty ROC curve");
    if (!(target_p_fa >= 0.0)) throw ContractError("target p_fa must be non-negative");
    const RocPoint* best = nullptr;
    for (const auto& p : curve.points) {
        if (p.p_fa > target_p_fa) continue;
        if (!best || p.p_fa > best->p_fa || (p.p_fa == best->p_fa && p.p_d >= best->p_d)) best = &p;
    }
    if (!best) throw ContractError("no ROC point with p_fa <= target");
    return *best;
}

RocPoint nearest_operating_point(const RocCurve& curve, double target_p_fa) {
    if (curve.points.empty()) throw ContractError("nearest_operating_point on an empty ROC curve");
    if (!std::isfinite(target_p_fa)) throw ContractError("target p_fa must be finite");
    const RocPoint* best = &curve.points.front();
    for (const auto& p : curve.points) {
        const double d = std::abs(p.p_fa - target_p_fa);
        const double best_d = std::abs(best->p_fa - target_p_fa);
        if (d < best_d || (d == best_d && p.p_d > best->p_d)) best = &p;
    }
    return *best;
}

}  // namespace physec
