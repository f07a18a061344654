#include "cli/config_file.hpp"

#include "physec/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace physec::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ConfigError(key, "expected a number, got '" + text + "'");
    return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ConfigError(key, "expected a non-negative integer, got '" + text + "'");
    return v;
}

std::size_t to_size(const std::string& key, const std::string& text) {
    return static_cast<std::size_t>(to_uint(key, text));
}

bool to_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError(key, "expected true or false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_double(key, item));
    }
    if (out.empty()) throw ConfigError(key, "expected a comma-separated list of numbers");
    return out;
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));
        if (key.empty()) throw ParseError("empty key", lineno);
        if (value.empty()) throw ParseError("empty value for '" + key + "'", lineno);
        kv[key] = value;
    }
    return kv;
}

KeyValues load_key_values(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    try {
        return parse_key_values(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "m_subcarriers",   "block_size",      "num_test_blocks",   "attack_intensity", "snr_db",
        "num_taps",        "delay_decay",     "fft_size",          "active_carriers",  "channel_seed",
        "drift_rho",       "seed",            "seed_bob_link",     "seed_eve_link",    "seed_noise",
        "seed_attack",     "threshold_grid",  "threshold_points",  "mse_grid_points",  "mse_update_rule",
        "training_mode",   "background_scale", "background_weight", "refit_mode",      "row_standardize",
        "init",            "fit_seed",        "rel_tol",           "max_iter",         "ridge_scale",
    };
    return keys;
}

ExperimentConfig config_from_key_values(const KeyValues& values) {
    for (const auto& [key, value] : values) {
        bool known = false;
        for (const auto& k : config_keys()) known |= k == key;
        if (!known) throw ConfigError(key, "unknown configuration key");
    }

    ExperimentConfig c;
    auto get = [&](const char* key) -> const std::string* {
        const auto it = values.find(key);
        return it == values.end() ? nullptr : &it->second;
    };

    std::uint64_t base = 0;
    if (const char* env = std::getenv(kSeedEnvVar); env && *env) base = to_uint(kSeedEnvVar, env);
    if (auto v = get("seed")) base = to_uint("seed", *v);
    c.seeds = {base + 1, base + 2, base + 3, base + 4};
    c.auth.fit.seed = base;

    if (auto v = get("m_subcarriers")) c.m_subcarriers = to_size("m_subcarriers", *v);
    if (auto v = get("block_size")) c.block_size = to_size("block_size", *v);
    if (auto v = get("num_test_blocks")) c.num_test_blocks = to_size("num_test_blocks", *v);
    if (auto v = get("attack_intensity")) c.attack_intensity = to_double("attack_intensity", *v);
    if (auto v = get("snr_db")) c.snr_db = to_double("snr_db", *v);
    if (auto v = get("num_taps")) c.profile.num_taps = to_size("num_taps", *v);
    if (auto v = get("delay_decay")) c.profile.delay_decay = to_double("delay_decay", *v);
    if (auto v = get("fft_size")) c.profile.fft_size = to_size("fft_size", *v);
    if (auto v = get("active_carriers")) c.profile.active_carriers = to_size("active_carriers", *v);
    if (auto v = get("channel_seed")) c.profile.seed = to_uint("channel_seed", *v);
    if (auto v = get("drift_rho")) c.profile.drift_rho = to_double("drift_rho", *v);
    if (auto v = get("seed_bob_link")) c.seeds.bob_link = to_uint("seed_bob_link", *v);
    if (auto v = get("seed_eve_link")) c.seeds.eve_link = to_uint("seed_eve_link", *v);
    if (auto v = get("seed_noise")) c.seeds.noise = to_uint("seed_noise", *v);
    if (auto v = get("seed_attack")) c.seeds.attack = to_uint("seed_attack", *v);
    if (auto v = get("threshold_grid")) c.threshold_grid = to_list("threshold_grid", *v);
    if (auto v = get("threshold_points")) {
        if (get("threshold_grid")) throw ConfigError("threshold_points", "conflicts with threshold_grid");
        const auto n = to_size("threshold_points", *v);
        if (n < 2) throw ConfigError("threshold_points", "must be at least 2");
        c.threshold_grid = default_threshold_grid(n);
    }
    if (auto v = get("mse_grid_points")) c.mse_grid_points = to_size("mse_grid_points", *v);
    if (auto v = get("mse_update_rule")) {
        if (*v == "frozen") {
            c.mse_rule = MseUpdateRule::frozen;
        } else if (*v == "running_mean_accepted") {
            c.mse_rule = MseUpdateRule::running_mean_accepted;
        } else {
            throw ConfigError("mse_update_rule", "expected frozen or running_mean_accepted");
        }
    }
    if (auto v = get("training_mode")) {
        if (*v == "anchored_background") {
            c.auth.training = TrainingMode::anchored_background;
        } else if (*v == "mixture_em") {
            c.auth.training = TrainingMode::mixture_em;
        } else {
            throw ConfigError("training_mode", "expected anchored_background or mixture_em");
        }
    }
    if (auto v = get("background_scale")) c.auth.background_scale = to_double("background_scale", *v);
    if (auto v = get("background_weight")) c.auth.background_weight = to_double("background_weight", *v);
    if (auto v = get("refit_mode")) {
        if (*v == "all") {
            c.auth.refit = RefitMode::all;
        } else if (*v == "accepted_only") {
            c.auth.refit = RefitMode::accepted_only;
        } else {
            throw ConfigError("refit_mode", "expected all or accepted_only");
        }
    }
    if (auto v = get("row_standardize")) c.auth.row_standardize = to_bool("row_standardize", *v);
    if (auto v = get("init")) {
        if (*v == "random_points") {
            c.auth.fit.init = InitStrategy::random_points;
        } else if (*v == "kmeans_pp") {
            c.auth.fit.init = InitStrategy::kmeans_pp;
        } else {
            throw ConfigError("init", "expected random_points or kmeans_pp");
        }
    }
    if (auto v = get("fit_seed")) c.auth.fit.seed = to_uint("fit_seed", *v);
    if (auto v = get("rel_tol")) c.auth.fit.rel_tol = to_double("rel_tol", *v);
    if (auto v = get("max_iter")) c.auth.fit.max_iter = to_size("max_iter", *v);
    if (auto v = get("ridge_scale")) c.auth.fit.ridge_scale = to_double("ridge_scale", *v);

    validate(c);
    return c;
}

}  // namespace physec::cli
