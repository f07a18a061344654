#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace physec {

/// Tapped-delay-line Rayleigh channel with an exponential power-delay profile,
/// observed through an OFDM receiver with `active_carriers` data bins.
struct ChannelProfile {
    std::size_t num_taps = 8;
    /// Power ratio between consecutive taps, p[n] ~ delay_decay^n.
    double delay_decay = 0.5;
    std::size_t fft_size = 64;
    std::size_t active_carriers = 48;
    std::uint64_t seed = 0;
    /// Per-message Gauss-Markov correlation of the taps. 1.0 keeps the link static.
    double drift_rho = 1.0;
};

/// Throws ConfigError naming the first invalid field.
void validate(const ChannelProfile& profile);

/// Normalized tap powers, sums to 1.
std::vector<double> power_delay_profile(const ChannelProfile& profile);

/// FFT bin used by active carrier `carrier`. Carriers are laid out symmetrically
/// around DC with DC left empty; when every bin is active the mapping is identity.
std::size_t active_carrier_bin(const ChannelProfile& profile, std::size_t carrier);

using ComplexResponse = std::vector<std::complex<double>>;

/// Per-bin estimation noise, parameterized by SNR relative to the mean channel power.
/// snr_db = +inf disables noise.
struct NoiseModel {
    double snr_db = 20.0;

    bool enabled() const noexcept;
    /// Complex noise variance for a channel whose mean per-bin power is `mean_power`.
    double variance(double mean_power) const;
};

void validate(const NoiseModel& noise);

/// Magnitude feature vector of one received message.
struct ChannelEstimate {
    std::vector<double> gains;
    std::vector<std::size_t> carrier_indices;

    std::size_t size() const noexcept { return gains.size(); }
    bool operator==(const ChannelEstimate&) const = default;
};

/// Throws ContractError unless gains/indices are non-empty, equally sized,
/// non-negative and strictly increasing.
void validate(const ChannelEstimate& estimate);

enum class Sender { Bob, Eve };

struct MessageRecord {
    ChannelEstimate estimate;
    Sender true_sender = Sender::Bob;
    std::size_t block_index = 0;
    std::size_t msg_index = 0;

    bool operator==(const MessageRecord&) const = default;
};

/// One transmitter's link to the receiver. The taps are a pure function of
/// (profile.seed, link_seed); advance() applies one Gauss-Markov drift step.
class LinkChannel {
public:
    LinkChannel(const ChannelProfile& profile, std::uint64_t link_seed);

    const ComplexResponse& response() const noexcept { return response_; }
    const std::vector<std::complex<double>>& taps() const noexcept { return taps_; }

    void advance();

private:
    void update_response();

    ChannelProfile profile_;
    std::vector<double> tap_power_;
    std::vector<std::complex<double>> taps_;
    ComplexResponse response_;
    std::mt19937_64 drift_rng_;
};

/// Frequency response (fft_size bins) of a freshly drawn link.
ComplexResponse generate_true_channel(const ChannelProfile& profile, std::uint64_t link_seed);

/// Indices of the m equally spaced carriers starting at carrier 0.
/// Throws ConfigError unless 1 <= m <= active_carriers and m divides active_carriers.
std::vector<std::size_t> subsample_carriers(std::size_t active_carriers, std::size_t m);

/// Noisy complex observation of the active carriers, in carrier order.
std::vector<std::complex<double>> observe_active_bins(const ComplexResponse& true_channel, const NoiseModel& noise,
                                                      const ChannelProfile& profile, std::mt19937_64& rng);

/// Adds complex Gaussian noise to every active bin, takes magnitudes and keeps
/// m_subcarriers equally spaced carriers. Noise for all active carriers is drawn
/// regardless of m, so estimates for different m share the same draw.
ChannelEstimate observe_estimate(const ComplexResponse& true_channel, const NoiseModel& noise,
                                 const ChannelProfile& profile, std::size_t m_subcarriers,
                                 std::mt19937_64& rng);

}  // namespace physec
