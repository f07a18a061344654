#pragma once

#include <string_view>

namespace physec {

enum class Verdict { AcceptBob, FlagEve };

/// verdict == AcceptBob exactly when bob_posterior >= threshold_used (GMM), or
/// when the distance passes the bound (MSE, where bob_posterior = 1 / (1 + mse)).
struct AuthDecision {
    Verdict verdict = Verdict::AcceptBob;
    double bob_posterior = 0.0;
    double threshold_used = 0.0;

    bool accepted() const noexcept { return verdict == Verdict::AcceptBob; }
};

constexpr std::string_view to_string(Verdict v) noexcept {
    return v == Verdict::AcceptBob ? "AcceptBob" : "FlagEve";
}

}  // namespace physec
