#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "bellnoise/errors.hpp"

namespace bellnoise {

using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;
using Vector4 = Eigen::Vector4cd;

inline constexpr double pi = 3.14159265358979323846;

// Basis ordering used everywhere, including serialization:
// index 0 = |HH>, 1 = |HV>, 2 = |VH>, 3 = |VV> (first factor is Alice's
// photon, second is Bob's particle).
enum class BasisIndex : int { HH = 0, HV = 1, VH = 2, VV = 3 };

inline double reduce_angle(double x) {
    double r = std::fmod(x, 2.0 * pi);
    if (r < 0.0) r += 2.0 * pi;
    return r;
}

// Pure-state angle theta with C = cos(theta), S = sin(theta). The reported
// entanglement ratio is min(C,S)/max(C,S): 0 for product states, 1 for
// maximally entangled ones.
struct PureStateParam {
    double theta = 0.0;

    explicit PureStateParam(double t) : theta(t) {
        if (!std::isfinite(t)) throw std::invalid_argument("theta must be finite");
        if (t < 0.0 || t > pi / 2.0)
            throw std::invalid_argument("theta must lie in [0, pi/2]");
    }

    double c() const { return std::cos(theta); }
    double s() const { return std::sin(theta); }

    double entanglement_ratio() const {
        const double cc = c(), ss = s();
        const double lo = std::min(cc, ss), hi = std::max(cc, ss);
        return hi == 0.0 ? 0.0 : lo / hi;
    }
};

enum class NoiseKind {
    ColoredPhotonPhoton, // coherence damped by (1-p)^2, both photons affected
    ColoredAtomPhoton,   // coherence damped by (1-p), photon side only
    White,               // isotropic mix with identity/4, level w
    Mixed,               // white noise applied on top of the photon-photon colored state
};

struct NoiseSpec {
    NoiseKind kind = NoiseKind::ColoredPhotonPhoton;
    double p = 0.0; // colored level
    double w = 0.0; // white level (White and Mixed only)

    static NoiseSpec colored_pp(double p) { return {NoiseKind::ColoredPhotonPhoton, p, 0.0}; }
    static NoiseSpec colored_ap(double p) { return {NoiseKind::ColoredAtomPhoton, p, 0.0}; }
    static NoiseSpec white(double w) { return {NoiseKind::White, 0.0, w}; }
    static NoiseSpec mixed(double p, double w) { return {NoiseKind::Mixed, p, w}; }

    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("noise level p outside [0, 1]");
        if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("noise level w outside [0, 1]");
    }
};

inline const char* to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::ColoredPhotonPhoton: return "colored-pp";
        case NoiseKind::ColoredAtomPhoton: return "colored-ap";
        case NoiseKind::White: return "white";
        case NoiseKind::Mixed: return "mixed";
    }
    return "?";
}

// One local measurement: apparatus orientation phi plus phase nu. Angles are
// stored reduced modulo 2*pi, which the induced projector cannot distinguish.
struct MeasurementSetting {
    double phi = 0.0;
    double nu = 0.0;

    MeasurementSetting() = default;
    MeasurementSetting(double phi_, double nu_) : phi(reduce_angle(phi_)), nu(reduce_angle(nu_)) {}
};

// 4x4 density matrix in the (HH, HV, VH, VV) product basis.
class TwoQubitState {
public:
    const Matrix4& matrix() const noexcept { return rho_; }

    // Constructs from an arbitrary matrix, enforcing the density-matrix
    // invariants: Hermitian and unit trace within 1e-12, eigenvalues
    // >= -1e-10. Use this for matrices that were not produced by the
    // trusted constructors below.
    static TwoQubitState from_matrix(const Matrix4& rho) {
        TwoQubitState st(rho);
        st.validate();
        return st;
    }

    void validate() const {
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                const auto d = rho_(i, j) - std::conj(rho_(j, i));
                if (std::abs(d) > 1e-12) throw numeric_error("state is not Hermitian");
            }
        if (std::abs(rho_.trace() - std::complex<double>(1.0, 0.0)) > 1e-12)
            throw numeric_error("state trace differs from 1");
        Eigen::SelfAdjointEigenSolver<Matrix4> es(rho_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10)
            throw numeric_error("state has a negative eigenvalue");
    }

private:
    explicit TwoQubitState(const Matrix4& rho) : rho_(rho) {}

    friend TwoQubitState make_pure(double);
    friend TwoQubitState make_noisy(double, const NoiseSpec&);

    Matrix4 rho_;
};

// |psi> = C|HV> + S|VH>, returned as the rank-1 density matrix.
inline TwoQubitState make_pure(double theta) {
    if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");
    const double c = std::cos(theta), s = std::sin(theta);
    Matrix4 rho = Matrix4::Zero();
    rho(1, 1) = c * c;
    rho(2, 2) = s * s;
    rho(1, 2) = c * s;
    rho(2, 1) = c * s;
    return TwoQubitState(rho);
}

// Noisy variants of make_pure. Colored noise keeps the diagonal of the pure
// state and damps only the HV<->VH coherences; white noise mixes with the
// maximally mixed state; Mixed applies white on top of the photon-photon
// colored state: (1-w) * rho_colored(theta, p) + (w/4) * identity.
inline TwoQubitState make_noisy(double theta, const NoiseSpec& spec) {
    if (!std::isfinite(theta)) throw std::invalid_argument("theta must be finite");
    spec.validate();
    const double c = std::cos(theta), s = std::sin(theta);

    Matrix4 rho = Matrix4::Zero();
    rho(1, 1) = c * c;
    rho(2, 2) = s * s;

    switch (spec.kind) {
        case NoiseKind::ColoredPhotonPhoton: {
            const double coh = (1.0 - spec.p) * (1.0 - spec.p) * c * s;
            rho(1, 2) = coh;
            rho(2, 1) = coh;
            break;
        }
        case NoiseKind::ColoredAtomPhoton: {
            const double coh = (1.0 - spec.p) * c * s;
            rho(1, 2) = coh;
            rho(2, 1) = coh;
            break;
        }
        case NoiseKind::White: {
            rho(1, 2) = c * s;
            rho(2, 1) = c * s;
            rho = (1.0 - spec.w) * rho + (spec.w / 4.0) * Matrix4::Identity();
            break;
        }
        case NoiseKind::Mixed: {
            const double coh = (1.0 - spec.p) * (1.0 - spec.p) * c * s;
            rho(1, 2) = coh;
            rho(2, 1) = coh;
            rho = (1.0 - spec.w) * rho + (spec.w / 4.0) * Matrix4::Identity();
            break;
        }
    }
    return TwoQubitState(rho);
}

// Outcome-0 projector |v><v| with |v> = sin(phi)|H> + e^{i nu} cos(phi)|V>.
inline Matrix2 projector(const MeasurementSetting& s) {
    const double sp = std::sin(s.phi), cp = std::cos(s.phi);
    const std::complex<double> phase(std::cos(s.nu), std::sin(s.nu));
    Matrix2 proj;
    proj(0, 0) = sp * sp;
    proj(0, 1) = sp * cp * std::conj(phase);
    proj(1, 0) = sp * cp * phase;
    proj(1, 1) = cp * cp;
    return proj;
}

inline Matrix4 kron(const Matrix2& a, const Matrix2& b) {
    Matrix4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

enum class Side { A, B };

namespace detail {

// Re tr(M rho), with the probability-range integrity check: values within
// 1e-10 of [0, 1] are clipped, anything further out aborts the computation.
inline double probability_trace(const Matrix4& m, const Matrix4& rho) {
    std::complex<double> tr(0.0, 0.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) tr += m(i, j) * rho(j, i);
    const double value = tr.real();
    if (value < -1e-10 || value > 1.0 + 1e-10)
        throw numeric_error("probability outside [0, 1] beyond tolerance");
    return std::min(1.0, std::max(0.0, value));
}

} // namespace detail

// P(outcome 0, outcome 0) for settings a (Alice) and b (Bob).
inline double joint_prob(const TwoQubitState& rho, const MeasurementSetting& a,
                         const MeasurementSetting& b) {
    return detail::probability_trace(kron(projector(a), projector(b)), rho.matrix());
}

// One-sided probability of outcome 0; independent of the other party's setting.
inline double marginal_prob(const TwoQubitState& rho, Side side, const MeasurementSetting& s) {
    const Matrix2 proj = projector(s);
    const Matrix2 id = Matrix2::Identity();
    const Matrix4 op = side == Side::A ? kron(proj, id) : kron(id, proj);
    return detail::probability_trace(op, rho.matrix());
}

} // namespace bellnoise
