#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "bellnoise/scan.hpp"

namespace bellnoise {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail; // filled on failure
};

// Fast invariant suite run by `bellnoise check` and by the test harness:
// state invariants on a (theta, p, w) grid, no-signaling consistency,
// projector idempotence, parser round-trips, run/CSV determinism under a
// fixed seed, and certified-reporting recomputation. Completes in seconds.
inline std::vector<CheckResult> run_self_checks(std::uint64_t seed) {
    std::vector<CheckResult> out;
    auto record = [&out](const std::string& name, bool pass, const std::string& detail = "") {
        out.push_back({name, pass, pass ? "" : detail});
    };

    // State invariants over the construction grid, all noise kinds.
    {
        bool pass = true;
        std::string detail;
        try {
            for (int it = 0; it < 20 && pass; ++it) {
                const double theta = (pi / 2.0) * it / 19.0;
                for (int ip = 0; ip < 11 && pass; ++ip) {
                    const double p = ip / 10.0;
                    for (int iw = 0; iw < 11 && pass; ++iw) {
                        const double w = iw / 10.0;
                        make_noisy(theta, NoiseSpec::colored_pp(p)).validate();
                        make_noisy(theta, NoiseSpec::colored_ap(p)).validate();
                        make_noisy(theta, NoiseSpec::white(w)).validate();
                        make_noisy(theta, NoiseSpec::mixed(p, w)).validate();
                    }
                }
            }
        } catch (const std::exception& e) {
            pass = false;
            detail = e.what();
        }
        record("state invariants on 20x11x11 grid", pass, detail);
    }

    // No-signaling: joint + complementary joint equals the marginal, and the
    // marginal ignores the other party's setting.
    {
        SplitMix64 rng(stream_seed(seed, 1));
        bool pass = true;
        std::string detail;
        for (int k = 0; k < 500 && pass; ++k) {
            const double theta = rng.uniform(0.0, pi / 2.0);
            const NoiseSpec specs[4] = {
                NoiseSpec::colored_pp(rng.next_double()), NoiseSpec::colored_ap(rng.next_double()),
                NoiseSpec::white(rng.next_double()),
                NoiseSpec::mixed(rng.next_double(), rng.next_double())};
            const TwoQubitState rho = make_noisy(theta, specs[k % 4]);
            const MeasurementSetting a{rng.uniform(0, 2 * pi), rng.uniform(0, 2 * pi)};
            const MeasurementSetting b{rng.uniform(0, 2 * pi), rng.uniform(0, 2 * pi)};
            const Matrix4 not_b = kron(projector(a), Matrix2::Identity() - projector(b));
            const Matrix4 not_a = kron(Matrix2::Identity() - projector(a), projector(b));
            const double sum_a = joint_prob(rho, a, b) +
                                 (not_b.transpose().cwiseProduct(rho.matrix())).sum().real();
            const double sum_b = joint_prob(rho, a, b) +
                                 (not_a.transpose().cwiseProduct(rho.matrix())).sum().real();
            if (std::abs(sum_a - marginal_prob(rho, Side::A, a)) > 1e-10 ||
                std::abs(sum_b - marginal_prob(rho, Side::B, b)) > 1e-10) {
                pass = false;
                detail = "no-signaling identity violated";
            }
        }
        record("no-signaling consistency (500 random cases)", pass, detail);
    }

    // Projector idempotence and unit trace.
    {
        SplitMix64 rng(stream_seed(seed, 2));
        bool pass = true;
        for (int k = 0; k < 1000 && pass; ++k) {
            const Matrix2 proj =
                projector({rng.uniform(0, 2 * pi), rng.uniform(0, 2 * pi)});
            if (((proj * proj) - proj).cwiseAbs().maxCoeff() > 1e-12 ||
                std::abs(proj.trace().real() - 1.0) > 1e-12)
                pass = false;
        }
        record("projector idempotence and trace (1000 random settings)", pass);
    }

    // Parser round-trips for the built-ins.
    {
        bool pass = true;
        std::string detail;
        for (const char* name : {"chsh", "i3322", "a5"}) {
            const auto f = BellFunctional::builtin(name);
            const std::string text = f.serialize();
            if (BellFunctional::parse(text).serialize() != text) {
                pass = false;
                detail = std::string("round-trip mismatch for ") + name;
            }
        }
        record("parser round-trips for all built-ins", pass, detail);
    }

    // Determinism: identical config twice, bit-identical outcome and CSV.
    {
        SearchConfig cfg;
        cfg.n_starts = 24;
        cfg.seed = seed;
        cfg.max_iterations = 200;
        cfg.jobs = 2;
        const auto f = BellFunctional::chsh();
        const auto run = [&] {
            return multistart(f, DetectorModel::Symmetric, NoiseSpec::colored_pp(0.1),
                              ThetaMode::free(), cfg);
        };
        const auto o1 = run(), o2 = run();
        bool pass = o1.best.values == o2.best.values &&
                    o1.best_objective == o2.best_objective &&
                    o1.converged_fraction == o2.converged_fraction &&
                    o1.distinct_minima == o2.distinct_minima;

        SweepSpec sweep;
        sweep.mode = SweepMode::PSweep;
        sweep.inequalities.push_back(f);
        sweep.noise_kinds = {NoiseKind::ColoredPhotonPhoton};
        sweep.p_grid = {0.0, 0.2};
        sweep.search = cfg;
        const auto csv_of = [&] {
            std::ostringstream os;
            write_csv(sweep_p(sweep), os);
            return os.str();
        };
        pass = pass && csv_of() == csv_of();
        record("run and CSV determinism under fixed seed", pass);
    }

    // Certified reporting: stored eta/ideal match a recomputation from the
    // best parameter vector.
    {
        bool pass = true;
        std::string detail;
        const struct {
            const char* name;
            DetectorModel m;
            NoiseSpec noise;
        } cases[] = {
            {"chsh", DetectorModel::Symmetric, NoiseSpec::colored_pp(0.05)},
            {"i3322", DetectorModel::OneSidedPerfect, NoiseSpec::colored_ap(0.0)},
        };
        for (const auto& c : cases) {
            const auto f = BellFunctional::builtin(c.name);
            SearchConfig cfg;
            cfg.n_starts = 16;
            cfg.seed = seed ^ 0xABCD;
            cfg.max_iterations = 300;
            cfg.jobs = 2;
            const auto o = multistart(f, c.m, c.noise, ThetaMode::free(), cfg);
            const auto d = evaluate(f, make_noisy(o.theta, c.noise),
                                    decode_settings(o.best, f.settings_a(), f.settings_b()));
            const auto ec = eta_crit(d, c.m);
            if (std::abs(d.ideal_value() - o.ideal_value) > 1e-10 ||
                ec.violation() != o.eta.violation() ||
                (ec.violation() && std::abs(ec.value() - o.eta.value()) > 1e-10)) {
                pass = false;
                detail = std::string("recomputation mismatch for ") + c.name;
            }
        }
        record("certified reporting recomputation", pass, detail);
    }

    return out;
}

} // namespace bellnoise
