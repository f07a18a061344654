#include "physec/eval.hpp"

#include <cmath>
#include <sstream>

namespace physec {

std::string roc_csv(const RocCurve& curve) {
    std::ostringstream out;
    out << "threshold,p_fa,p_d,tp,fn,fp,tn\n";
    for (const auto& p : curve.points) {
        out << format_double(p.threshold) << ',' << format_double(p.p_fa) << ',' << format_double(p.p_d) << ','
            << p.counts.true_detections << ',' << p.counts.missed_detections << ',' << p.counts.false_alarms << ','
            << p.counts.correct_accepts << '\n';
    }
    return out.str();
}

namespace {

// JSON has no infinities; write them as strings so the echo stays lossless.
nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

std::string_view to_string(TrainingMode m) {
    return m == TrainingMode::anchored_background ? "anchored_background" : "mixture_em";
}

std::string_view to_string(RefitMode m) { return m == RefitMode::all ? "all" : "accepted_only"; }

std::string_view to_string(MseUpdateRule r) {
    return r == MseUpdateRule::frozen ? "frozen" : "running_mean_accepted";
}

std::string_view to_string(InitStrategy s) { return s == InitStrategy::random_points ? "random_points" : "kmeans_pp"; }

}  // namespace

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j = {
        {"m_subcarriers", c.m_subcarriers},
        {"block_size", c.block_size},
        {"num_test_blocks", c.num_test_blocks},
        {"attack_intensity", c.attack_intensity},
        {"snr_db", number(c.snr_db)},
        {"num_taps", c.profile.num_taps},
        {"delay_decay", c.profile.delay_decay},
        {"fft_size", c.profile.fft_size},
        {"active_carriers", c.profile.active_carriers},
        {"channel_seed", c.profile.seed},
        {"drift_rho", c.profile.drift_rho},
        {"seed_bob_link", c.seeds.bob_link},
        {"seed_eve_link", c.seeds.eve_link},
        {"seed_noise", c.seeds.noise},
        {"seed_attack", c.seeds.attack},
        {"mse_grid_points", c.mse_grid_points},
        {"mse_update_rule", to_string(c.mse_rule)},
        {"training_mode", to_string(c.auth.training)},
        {"background_scale", c.auth.background_scale},
        {"background_weight", c.auth.background_weight},
        {"refit_mode", to_string(c.auth.refit)},
        {"row_standardize", c.auth.row_standardize},
        {"init", to_string(c.auth.fit.init)},
        {"fit_seed", c.auth.fit.seed},
        {"rel_tol", c.auth.fit.rel_tol},
        {"max_iter", c.auth.fit.max_iter},
        {"ridge_scale", c.auth.fit.ridge_scale},
    };
    if (c.threshold_grid.empty()) {
        j["threshold_points"] = default_threshold_grid().size();
    } else {
        j["threshold_grid"] = c.threshold_grid;
    }
    return j;
}

nlohmann::json to_json(const RocPoint& p) {
    return {{"threshold", number(p.threshold)},
            {"p_fa", p.p_fa},
            {"p_d", p.p_d},
            {"tp", p.counts.true_detections},
            {"fn", p.counts.missed_detections},
            {"fp", p.counts.false_alarms},
            {"tn", p.counts.correct_accepts}};
}

}  // namespace physec
