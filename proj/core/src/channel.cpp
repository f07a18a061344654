#include "physec/channel.hpp"

#include "physec/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace physec {

namespace {

constexpr std::uint32_t kTapStream = 0x74617073;
constexpr std::uint32_t kDriftStream = 0x64726674;

std::mt19937_64 seeded(std::uint64_t a, std::uint64_t b, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32), stream};
    return std::mt19937_64(seq);
}

// CN(0, 1): real and imaginary parts each N(0, 1/2).
std::complex<double> unit_complex_gaussian(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
    const double re = normal(rng);
    const double im = normal(rng);
    return {re, im};
}

}  // namespace

void validate(const ChannelProfile& p) {
    if (p.fft_size == 0) throw ConfigError("fft_size", "must be positive");
    if (p.num_taps == 0) throw ConfigError("num_taps", "must be positive");
    if (p.num_taps > p.fft_size)
        throw ConfigError("num_taps", "must not exceed fft_size (" + std::to_string(p.fft_size) + ")");
    if (p.active_carriers == 0) throw ConfigError("active_carriers", "must be positive");
    if (p.active_carriers > p.fft_size)
        throw ConfigError("active_carriers", "must not exceed fft_size (" + std::to_string(p.fft_size) + ")");
    if (!(std::isfinite(p.delay_decay) && p.delay_decay > 0.0))
        throw ConfigError("delay_decay", "must be a positive finite number");
    if (!(p.drift_rho >= 0.0 && p.drift_rho <= 1.0))
        throw ConfigError("drift_rho", "must lie in [0, 1]");
}

std::vector<double> power_delay_profile(const ChannelProfile& profile) {
    validate(profile);
    std::vector<double> power(profile.num_taps);
    double total = 0.0;
    double p = 1.0;
    for (auto& v : power) {
        v = p;
        total += p;
        p *= profile.delay_decay;
    }
    for (auto& v : power) v /= total;
    return power;
}

std::size_t active_carrier_bin(const ChannelProfile& profile, std::size_t carrier) {
    if (carrier >= profile.active_carriers)
        throw ContractError("active carrier " + std::to_string(carrier) + " out of range");
    if (profile.active_carriers == profile.fft_size) return carrier;
    const std::size_t negative = profile.active_carriers / 2;
    if (carrier < negative) return profile.fft_size - negative + carrier;
    return 1 + (carrier - negative);
}

bool NoiseModel::enabled() const noexcept { return !(std::isinf(snr_db) && snr_db > 0.0); }

double NoiseModel::variance(double mean_power) const {
    if (!enabled()) return 0.0;
    const double v = mean_power / std::pow(10.0, snr_db / 10.0);
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError("snr_db", "noise variance must be strictly positive and finite");
    return v;
}

void validate(const NoiseModel& noise) {
    if (std::isnan(noise.snr_db) || (std::isinf(noise.snr_db) && noise.snr_db < 0.0))
        throw ConfigError("snr_db", "must be a number or +inf");
    (void)noise.variance(1.0);
}

void validate(const ChannelEstimate& e) {
    if (e.gains.empty()) throw ContractError("channel estimate is empty");
    if (e.gains.size() != e.carrier_indices.size())
        throw ContractError("channel estimate has " + std::to_string(e.gains.size()) + " gains but " +
                            std::to_string(e.carrier_indices.size()) + " carrier indices");
    for (std::size_t i = 0; i < e.gains.size(); ++i) {
        if (!(e.gains[i] >= 0.0) || !std::isfinite(e.gains[i]))
            throw ContractError("gain " + std::to_string(i) + " is negative or not finite");
        if (i > 0 && e.carrier_indices[i] <= e.carrier_indices[i - 1])
            throw ContractError("carrier indices must be strictly increasing");
    }
}

LinkChannel::LinkChannel(const ChannelProfile& profile, std::uint64_t link_seed)
    : profile_(profile),
      tap_power_(power_delay_profile(profile)),
      drift_rng_(seeded(profile.seed, link_seed, kDriftStream)) {
    auto rng = seeded(profile.seed, link_seed, kTapStream);
    taps_.reserve(tap_power_.size());
    for (double p : tap_power_) taps_.push_back(std::sqrt(p) * unit_complex_gaussian(rng));
    update_response();
}

void LinkChannel::advance() {
    const double rho = profile_.drift_rho;
    if (rho >= 1.0) return;
    const double innovation = std::sqrt(1.0 - rho * rho);
    for (std::size_t n = 0; n < taps_.size(); ++n)
        taps_[n] = rho * taps_[n] +
                   innovation * std::sqrt(tap_power_[n]) * unit_complex_gaussian(drift_rng_);
    update_response();
}

void LinkChannel::update_response() {
    const std::size_t fft = profile_.fft_size;
    response_.assign(fft, {0.0, 0.0});
    for (std::size_t bin = 0; bin < fft; ++bin) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t n = 0; n < taps_.size(); ++n) {
            // Reduce the phase index modulo fft so large bins stay exact.
            const auto k = static_cast<double>((bin * n) % fft);
            const double phase = -2.0 * std::numbers::pi * k / static_cast<double>(fft);
            acc += taps_[n] * std::polar(1.0, phase);
        }
        response_[bin] = acc;
    }
}

ComplexResponse generate_true_channel(const ChannelProfile& profile, std::uint64_t link_seed) {
    return LinkChannel(profile, link_seed).response();
}

std::vector<std::size_t> subsample_carriers(std::size_t active_carriers, std::size_t m) {
    if (m == 0) throw ConfigError("m_subcarriers", "must be positive");
    if (m > active_carriers)
        throw ConfigError("m_subcarriers", "must not exceed active_carriers (" +
                                               std::to_string(active_carriers) + ")");
    if (active_carriers % m != 0)
        throw ConfigError("m_subcarriers", "must divide active_carriers (" +
                                               std::to_string(active_carriers) + ") for equal spacing");
    const std::size_t stride = active_carriers / m;
    std::vector<std::size_t> idx(m);
    for (std::size_t i = 0; i < m; ++i) idx[i] = i * stride;
    return idx;
}

std::vector<std::complex<double>> observe_active_bins(const ComplexResponse& true_channel, const NoiseModel& noise,
                                                      const ChannelProfile& profile, std::mt19937_64& rng) {
    validate(profile);
    validate(noise);
    if (true_channel.size() != profile.fft_size)
        throw ContractError("true channel has " + std::to_string(true_channel.size()) +
                            " bins, profile expects " + std::to_string(profile.fft_size));

    const std::size_t active = profile.active_carriers;
    std::vector<std::complex<double>> bins(active);
    double mean_power = 0.0;
    for (std::size_t c = 0; c < active; ++c) {
        bins[c] = true_channel[active_carrier_bin(profile, c)];
        mean_power += std::norm(bins[c]);
    }
    mean_power /= static_cast<double>(active);

    if (noise.enabled()) {
        const double sigma = std::sqrt(noise.variance(mean_power));
        for (auto& b : bins) b += sigma * unit_complex_gaussian(rng);
    }
    return bins;
}

ChannelEstimate observe_estimate(const ComplexResponse& true_channel, const NoiseModel& noise,
                                 const ChannelProfile& profile, std::size_t m_subcarriers,
                                 std::mt19937_64& rng) {
    validate(profile);
    const auto selected = subsample_carriers(profile.active_carriers, m_subcarriers);
    const auto bins = observe_active_bins(true_channel, noise, profile, rng);

    ChannelEstimate out;
    out.carrier_indices = selected;
    out.gains.reserve(selected.size());
    for (std::size_t c : selected) out.gains.push_back(std::abs(bins[c]));
    return out;
}

}  // namespace physec
