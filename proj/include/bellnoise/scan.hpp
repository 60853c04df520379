#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "bellnoise/optimize.hpp"

namespace bellnoise {

enum class SweepMode { PSweep, CsSweep, Surface, MixedSweep, Table };

inline const char* to_string(SweepMode m) {
    switch (m) {
        case SweepMode::PSweep: return "p-sweep";
        case SweepMode::CsSweep: return "cs-sweep";
        case SweepMode::Surface: return "surface";
        case SweepMode::MixedSweep: return "mixed-sweep";
        case SweepMode::Table: return "table";
    }
    return "?";
}

// One sweep job. Grids must be finite, ascending, in [0, 1] for noise levels
// and (0, 1] for entanglement ratios. Every cell reuses cfg.seed for its
// start streams, so cells sharing a state (e.g. mixed noise at w = 0 versus
// the plain colored sweep) produce bit-identical optimizer runs.
struct SweepSpec {
    SweepMode mode = SweepMode::PSweep;
    std::vector<BellFunctional> inequalities;
    DetectorModel detector = DetectorModel::Symmetric;
    std::vector<NoiseKind> noise_kinds;
    std::vector<double> p_grid;  // colored levels (or generic level for p-sweeps)
    std::vector<double> cs_grid; // entanglement ratios in (0, 1]
    std::vector<double> w_grid;  // white levels for mixed sweeps
    SearchConfig search;
    std::string output_path;

    void validate() const {
        search.validate();
        if (inequalities.empty()) throw std::invalid_argument("sweep needs an inequality");
        auto check_grid = [](const std::vector<double>& g, double lo, bool lo_open,
                             const char* what) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (!std::isfinite(g[i]) || g[i] > 1.0 || g[i] < lo || (lo_open && g[i] == lo))
                    throw std::invalid_argument(std::string(what) + " grid value out of range");
                if (i > 0 && g[i] <= g[i - 1])
                    throw std::invalid_argument(std::string(what) + " grid must be ascending");
            }
        };
        check_grid(p_grid, 0.0, false, "noise");
        check_grid(w_grid, 0.0, false, "white-noise");
        check_grid(cs_grid, 0.0, true, "C/S");
    }
};

// One grid cell: swept coordinates plus everything needed to recompute the
// reported eta_crit and ideal value from scratch.
struct SweepRow {
    std::string mode;
    std::string inequality;
    DetectorModel detector = DetectorModel::Symmetric;
    NoiseKind noise_kind = NoiseKind::ColoredPhotonPhoton;
    double p = 0.0;
    double w = 0.0;
    double cs = 0.0;
    double theta = 0.0;
    CriticalEfficiency eta;
    double ideal_value = 0.0;
    int n_starts = 0;
    std::uint64_t seed = 0;
    double converged_fraction = 0.0;
    std::vector<double> phis;
    std::vector<double> nus;
};

namespace detail {

// The p-sweep coordinate is the level of whichever noise the state carries:
// colored kinds store it in p, white stores it in w.
inline NoiseSpec noise_at_level(NoiseKind kind, double level) {
    switch (kind) {
        case NoiseKind::ColoredPhotonPhoton: return NoiseSpec::colored_pp(level);
        case NoiseKind::ColoredAtomPhoton: return NoiseSpec::colored_ap(level);
        case NoiseKind::White: return NoiseSpec::white(level);
        case NoiseKind::Mixed: break;
    }
    throw std::invalid_argument("mixed noise needs explicit (p, w) levels");
}

inline double entanglement_ratio_of(double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double lo = std::min(std::abs(c), std::abs(s)), hi = std::max(std::abs(c), std::abs(s));
    return hi == 0.0 ? 0.0 : lo / hi;
}

inline SweepRow row_from_outcome(const SweepSpec& spec, const BellFunctional& f,
                                 NoiseKind kind, const NoiseSpec& noise,
                                 const OptimizationOutcome& outcome) {
    SweepRow row;
    row.mode = to_string(spec.mode);
    row.inequality = f.name();
    row.detector = spec.detector;
    row.noise_kind = kind;
    row.p = noise.p;
    row.w = noise.w;
    row.theta = outcome.theta;
    row.cs = entanglement_ratio_of(outcome.theta);
    row.eta = outcome.eta;
    row.ideal_value = outcome.ideal_value;
    row.n_starts = spec.search.n_starts;
    row.seed = spec.search.seed;
    row.converged_fraction = outcome.converged_fraction;
    const SettingsAssignment s = decode_settings(outcome.best, f.settings_a(), f.settings_b());
    for (const auto& a : s.alice) {
        row.phis.push_back(a.phi);
        row.nus.push_back(a.nu);
    }
    for (const auto& b : s.bob) {
        row.phis.push_back(b.phi);
        row.nus.push_back(b.nu);
    }
    return row;
}

// Fixed-ratio multistart: tries theta = atan(r) and its mirror pi/2 - atan(r)
// (the asymmetric marginals make the orientations inequivalent) and keeps
// the better outcome by objective.
inline OptimizationOutcome best_over_orientations(const BellFunctional& f, DetectorModel m,
                                                  const NoiseSpec& noise, double ratio,
                                                  const SearchConfig& cfg, double* theta_used) {
    const double t1 = std::atan(ratio);
    const double t2 = pi / 2.0 - t1;
    OptimizationOutcome o1 = multistart(f, m, noise, ThetaMode::fixed(t1), cfg);
    OptimizationOutcome o2 = multistart(f, m, noise, ThetaMode::fixed(t2), cfg);
    if (o2.best_objective < o1.best_objective) {
        *theta_used = t2;
        return o2;
    }
    *theta_used = t1;
    return o1;
}

} // namespace detail

// Minimum eta_crit versus noise level, optimizing states and settings.
inline std::vector<SweepRow> sweep_p(const SweepSpec& spec) {
    spec.validate();
    if (spec.mode != SweepMode::PSweep) throw std::invalid_argument("spec mode is not p-sweep");
    std::vector<SweepRow> rows;
    for (const auto& f : spec.inequalities)
        for (const auto kind : spec.noise_kinds)
            for (const double level : spec.p_grid) {
                const NoiseSpec noise = detail::noise_at_level(kind, level);
                const auto outcome =
                    multistart(f, spec.detector, noise, ThetaMode::free(), spec.search);
                rows.push_back(detail::row_from_outcome(spec, f, kind, noise, outcome));
            }
    return rows;
}

// eta_crit versus entanglement ratio at fixed noise levels (one curve per p).
inline std::vector<SweepRow> sweep_cs(const SweepSpec& spec) {
    spec.validate();
    if (spec.mode != SweepMode::CsSweep) throw std::invalid_argument("spec mode is not cs-sweep");
    std::vector<SweepRow> rows;
    for (const auto& f : spec.inequalities)
        for (const auto kind : spec.noise_kinds)
            for (const double level : spec.p_grid)
                for (const double ratio : spec.cs_grid) {
                    const NoiseSpec noise = detail::noise_at_level(kind, level);
                    double theta = 0.0;
                    const auto outcome = detail::best_over_orientations(
                        f, spec.detector, noise, ratio, spec.search, &theta);
                    SweepRow row = detail::row_from_outcome(spec, f, kind, noise, outcome);
                    row.theta = theta;
                    row.cs = ratio;
                    rows.push_back(row);
                }
    return rows;
}

// Maximal violation at unit efficiency over settings, per (level, ratio)
// cell; no efficiency involved. Cells that cannot reach a positive value
// keep their no-violation marker.
inline std::vector<SweepRow> violation_surface(const SweepSpec& spec) {
    spec.validate();
    if (spec.mode != SweepMode::Surface) throw std::invalid_argument("spec mode is not surface");
    std::vector<SweepRow> rows;
    for (const auto& f : spec.inequalities)
        for (const auto kind : spec.noise_kinds)
            for (const double level : spec.p_grid)
                for (const double ratio : spec.cs_grid) {
                    const NoiseSpec noise = detail::noise_at_level(kind, level);
                    const int n_a = f.settings_a(), n_b = f.settings_b();

                    double best_theta = 0.0;
                    double best_neg = 0.0;
                    ParameterVector best_x;
                    double conv = 0.0;
                    bool first = true;
                    for (const double theta :
                         {std::atan(ratio), pi / 2.0 - std::atan(ratio)}) {
                        const ViolationObjective vobj(f, noise, ThetaMode::fixed(theta));
                        const auto results =
                            run_starts(vobj, n_a, n_b, ThetaMode::fixed(theta), spec.search);
                        std::size_t bi = 0;
                        int converged = 0;
                        for (std::size_t i = 0; i < results.size(); ++i) {
                            if (results[i].converged) ++converged;
                            if (results[i].value < results[bi].value) bi = i;
                        }
                        if (first || results[bi].value < best_neg) {
                            first = false;
                            best_neg = results[bi].value;
                            best_x = results[bi].x;
                            best_theta = theta;
                            conv = static_cast<double>(converged) /
                                   static_cast<double>(results.size());
                        }
                    }

                    // Re-certify from the winning settings.
                    const auto d = evaluate(f, make_noisy(best_theta, noise),
                                            decode_settings(best_x, n_a, n_b));
                    SweepRow row;
                    row.mode = to_string(spec.mode);
                    row.inequality = f.name();
                    row.detector = spec.detector;
                    row.noise_kind = kind;
                    row.p = noise.p;
                    row.w = noise.w;
                    row.theta = best_theta;
                    row.cs = ratio;
                    row.ideal_value = d.ideal_value();
                    row.eta = eta_crit(d, spec.detector);
                    row.n_starts = spec.search.n_starts;
                    row.seed = spec.search.seed;
                    row.converged_fraction = conv;
                    const SettingsAssignment s = decode_settings(best_x, n_a, n_b);
                    for (const auto& a : s.alice) {
                        row.phis.push_back(a.phi);
                        row.nus.push_back(a.nu);
                    }
                    for (const auto& b : s.bob) {
                        row.phis.push_back(b.phi);
                        row.nus.push_back(b.nu);
                    }
                    rows.push_back(row);
                }
    return rows;
}

// Minimum eta_crit with both noises present: colored level fixed per curve
// (p_grid), white level swept (w_grid), states free.
inline std::vector<SweepRow> mixed_sweep(const SweepSpec& spec) {
    spec.validate();
    if (spec.mode != SweepMode::MixedSweep)
        throw std::invalid_argument("spec mode is not mixed-sweep");
    std::vector<SweepRow> rows;
    for (const auto& f : spec.inequalities)
        for (const double p : spec.p_grid)
            for (const double w : spec.w_grid) {
                const NoiseSpec noise = NoiseSpec::mixed(p, w);
                const auto outcome =
                    multistart(f, spec.detector, noise, ThetaMode::free(), spec.search);
                rows.push_back(
                    detail::row_from_outcome(spec, f, NoiseKind::Mixed, noise, outcome));
            }
    return rows;
}

enum class ReferenceTable { I, II };

// The bundled reference configurations: entanglement ratio fixed at 0.2041,
// observable-violation floor 0.01, colored levels 0 and 0.03.
// I: CHSH, symmetric detectors, photon-photon colored noise.
// II: I3322, perfect Alice, atom-photon colored noise.
inline std::vector<SweepRow> reproduce_table(ReferenceTable which, const SearchConfig& cfg) {
    SweepSpec spec;
    spec.mode = SweepMode::Table;
    spec.search = cfg;
    spec.search.violation_floor = 0.01;
    const double ratio = 0.2041;

    NoiseKind kind;
    if (which == ReferenceTable::I) {
        spec.inequalities.push_back(BellFunctional::chsh());
        spec.detector = DetectorModel::Symmetric;
        kind = NoiseKind::ColoredPhotonPhoton;
    } else {
        spec.inequalities.push_back(BellFunctional::i3322());
        spec.detector = DetectorModel::OneSidedPerfect;
        kind = NoiseKind::ColoredAtomPhoton;
    }

    std::vector<SweepRow> rows;
    for (const double p : {0.0, 0.03}) {
        const NoiseSpec noise = detail::noise_at_level(kind, p);
        double theta = 0.0;
        const auto outcome = detail::best_over_orientations(
            spec.inequalities.front(), spec.detector, noise, ratio, spec.search, &theta);
        SweepRow row = detail::row_from_outcome(spec, spec.inequalities.front(), kind, noise,
                                                outcome);
        row.theta = theta;
        row.cs = ratio;
        rows.push_back(row);
    }
    return rows;
}

// Recompute eta_crit and the ideal value from a row's stored coordinates and
// settings; true when both agree with the stored fields within 1e-9.
inline bool verify_row(const SweepRow& row, const BellFunctional& f) {
    NoiseSpec noise;
    switch (row.noise_kind) {
        case NoiseKind::ColoredPhotonPhoton: noise = NoiseSpec::colored_pp(row.p); break;
        case NoiseKind::ColoredAtomPhoton: noise = NoiseSpec::colored_ap(row.p); break;
        case NoiseKind::White: noise = NoiseSpec::white(row.w); break;
        case NoiseKind::Mixed: noise = NoiseSpec::mixed(row.p, row.w); break;
    }
    const int n_a = f.settings_a(), n_b = f.settings_b();
    if (static_cast<int>(row.phis.size()) != n_a + n_b ||
        static_cast<int>(row.nus.size()) != n_a + n_b)
        return false;
    SettingsAssignment s;
    for (int i = 0; i < n_a; ++i) s.alice.emplace_back(row.phis[i], row.nus[i]);
    for (int i = 0; i < n_b; ++i) s.bob.emplace_back(row.phis[n_a + i], row.nus[n_a + i]);
    const auto d = evaluate(f, make_noisy(row.theta, noise), s);
    if (std::abs(d.ideal_value() - row.ideal_value) > 1e-9) return false;
    const auto ec = eta_crit(d, row.detector);
    if (ec.violation() != row.eta.violation()) return false;
    if (ec.violation() && std::abs(ec.value() - row.eta.value()) > 1e-9) return false;
    return true;
}

// ---------------------------------------------------------------------------
// CSV output. Header then one line per row; floating-point fields printed
// with 10 significant digits; the eta_crit field is empty on no-violation
// rows (no_violation carries the marker). Settings columns are padded to the
// widest inequality in the file.

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace detail

inline void write_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    std::size_t k = 0;
    for (const auto& row : rows) k = std::max(k, row.phis.size());

    out << "mode,inequality,detector,noise_kind,p,w,cs,theta,eta_crit,no_violation,"
           "ideal_value,n_starts,seed,converged_fraction";
    for (std::size_t i = 1; i <= k; ++i) out << ",phi_" << i;
    for (std::size_t i = 1; i <= k; ++i) out << ",nu_" << i;
    out << "\n";

    for (const auto& row : rows) {
        out << row.mode << ',' << row.inequality << ',' << to_string(row.detector) << ','
            << to_string(row.noise_kind) << ',' << detail::fmt_double(row.p) << ','
            << detail::fmt_double(row.w) << ',' << detail::fmt_double(row.cs) << ','
            << detail::fmt_double(row.theta) << ',';
        if (row.eta.violation()) out << detail::fmt_double(row.eta.value());
        out << ',' << (row.eta.violation() ? 0 : 1) << ','
            << detail::fmt_double(row.ideal_value) << ',' << row.n_starts << ',' << row.seed
            << ',' << detail::fmt_double(row.converged_fraction);
        for (std::size_t i = 0; i < k; ++i) {
            out << ',';
            if (i < row.phis.size()) out << detail::fmt_double(row.phis[i]);
        }
        for (std::size_t i = 0; i < k; ++i) {
            out << ',';
            if (i < row.nus.size()) out << detail::fmt_double(row.nus[i]);
        }
        out << "\n";
    }
}

} // namespace bellnoise
