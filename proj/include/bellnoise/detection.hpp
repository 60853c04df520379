#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "bellnoise/inequality.hpp"

namespace bellnoise {

// Symmetric: every detector has efficiency eta (photon-photon experiments).
// OneSidedPerfect: one party detects perfectly, the other with efficiency
// eta (atom-photon experiments). The perfect detector belongs to the party
// whose marginal terms enter K_B, so its marginals survive unscaled.
enum class DetectorModel { Symmetric, OneSidedPerfect };

inline const char* to_string(DetectorModel m) {
    return m == DetectorModel::Symmetric ? "symmetric" : "one-sided-perfect";
}

// Threshold efficiency, or the explicit no-violation marker when no
// eta <= 1 makes the rewritten functional positive.
class CriticalEfficiency {
public:
    static CriticalEfficiency no_violation() { return CriticalEfficiency(); }
    static CriticalEfficiency of(double value) {
        CriticalEfficiency c;
        c.value_ = value;
        return c;
    }

    bool violation() const noexcept { return value_.has_value(); }
    double value() const {
        if (!value_) throw std::logic_error("no violation: critical efficiency undefined");
        return *value_;
    }

private:
    std::optional<double> value_;
};

// Functional value once non-detections count as "outcome != 0": each joint
// probability picks up eta_A * eta_B, each marginal the efficiency of its
// own side. Symmetric model: eta^2 J + eta (K_A + K_B). One-sided model:
// eta (J + K_A) + K_B.
inline double value_at_eta(const EfficiencyDecomposition& d, DetectorModel m, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("eta outside [0, 1]");
    if (m == DetectorModel::Symmetric) return eta * eta * d.j + eta * (d.k_a + d.k_b);
    return eta * (d.j + d.k_a) + d.k_b;
}

// Closed-form threshold. In the symmetric model the nonzero root of
// value_at_eta is -(K_A + K_B)/J; in the one-sided model it is
// -K_B/(J + K_A). Negative roots (possible for functionals with positive
// marginal coefficients) clamp to 0: any positive efficiency violates.
inline CriticalEfficiency eta_crit(const EfficiencyDecomposition& d, DetectorModel m) {
    double slope, offset;
    if (m == DetectorModel::Symmetric) {
        slope = d.j;
        offset = d.k_a + d.k_b;
    } else {
        slope = d.j + d.k_a;
        offset = d.k_b;
    }
    if (!(slope > 0.0)) return CriticalEfficiency::no_violation();
    const double root = -offset / slope;
    if (root > 1.0) return CriticalEfficiency::no_violation();
    return CriticalEfficiency::of(std::max(0.0, root));
}

// Independent root finder for the same threshold: scans (0, 1] for the sign
// change of value_at_eta and bisects it down to 1e-12. Kept free of the
// closed form so the two can check each other.
inline CriticalEfficiency eta_crit_bisect(const EfficiencyDecomposition& d, DetectorModel m) {
    if (value_at_eta(d, m, 1.0) <= 0.0) return CriticalEfficiency::no_violation();

    constexpr int grid = 4096;
    double lo = 0.0, hi = 1.0;
    bool found = false;
    for (int k = grid - 1; k >= 1; --k) {
        const double eta = static_cast<double>(k) / grid;
        if (value_at_eta(d, m, eta) <= 0.0) {
            lo = eta;
            hi = static_cast<double>(k + 1) / grid;
            found = true;
            break;
        }
    }
    if (!found) {
        // Positive on the whole grid. If the value is already positive at
        // eta = 0 the root is negative and clamps to 0; otherwise the
        // crossing sits below the first grid point.
        if (value_at_eta(d, m, 0.0) > 0.0) return CriticalEfficiency::of(0.0);
        hi = 1.0 / grid;
    }
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (value_at_eta(d, m, mid) <= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return CriticalEfficiency::of(0.5 * (lo + hi));
}

} // namespace bellnoise
