#include <catch2/catch.hpp>

#include <cmath>

#include "bellnoise/optimize.hpp"

using namespace bellnoise;

namespace {

ParameterVector tsirelson_vector() {
    // Layout: phi_1..phi_4, nu_1..nu_4 for (Alice 0, Alice 1, Bob 0, Bob 1).
    return {{0.0, pi / 4, 3 * pi / 8, 5 * pi / 8, 0.0, 0.0, 0.0, 0.0}, false};
}

ParameterVector plateau_vector() {
    // Every projector points at |V>: zero joint part, no violation anywhere
    // in the finite-difference stencil.
    return {{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, false};
}

SearchConfig quick_config(int starts, std::uint64_t seed, int iters = 400) {
    SearchConfig cfg;
    cfg.n_starts = starts;
    cfg.seed = seed;
    cfg.max_iterations = iters;
    cfg.jobs = 2;
    return cfg;
}

} // namespace

TEST_CASE("objective values", "[optimize]") {
    const auto f = BellFunctional::chsh();
    const SearchConfig cfg = quick_config(1, 0);
    const auto obj = objective(f, DetectorModel::Symmetric, NoiseSpec::colored_pp(0.0),
                               ThetaMode::fixed(pi / 4), cfg);

    SECTION("analytic optimum") {
        CHECK(obj(tsirelson_vector()) == Approx(0.82842712).margin(1e-6));
    }
    SECTION("no violation maps to the sentinel") {
        CHECK(obj(plateau_vector()) == no_violation_objective);
    }
    SECTION("dimension mismatch rejected") {
        ParameterVector bad{{0.0, 0.0}, false};
        CHECK_THROWS_AS(obj(bad), std::invalid_argument);
        ParameterVector with_theta = tsirelson_vector();
        with_theta.values.push_back(0.3);
        with_theta.has_theta = true;
        CHECK_THROWS_AS(obj(with_theta), std::invalid_argument);
    }
}

TEST_CASE("violation floor penalty arithmetic", "[optimize]") {
    const auto f = BellFunctional::chsh();
    SearchConfig cfg = quick_config(1, 0);
    cfg.violation_floor = 0.01;
    cfg.penalty_weight = 1000.0;
    const NoiseSpec noise = NoiseSpec::colored_pp(0.0);
    const ThetaMode tm = ThetaMode::fixed(pi / 4);
    const auto obj = objective(f, DetectorModel::Symmetric, noise, tm, cfg);

    SplitMix64 rng(606);
    int found = 0;
    for (int k = 0; k < 200000 && found < 5; ++k) {
        ParameterVector x{{rng.uniform(0, 2 * pi), rng.uniform(0, 2 * pi),
                           rng.uniform(0, 2 * pi), rng.uniform(0, 2 * pi),
                           rng.uniform(0, 2 * pi), rng.uniform(0, 2 * pi),
                           rng.uniform(0, 2 * pi), rng.uniform(0, 2 * pi)},
                          false};
        const auto d = evaluate(f, make_pure(pi / 4), decode_settings(x, 2, 2));
        const auto ec = eta_crit(d, DetectorModel::Symmetric);
        if (!ec.violation() || d.ideal_value() >= 0.01 || d.ideal_value() <= 0.0) continue;
        ++found;
        const double expected = ec.value() + 1000.0 * (0.01 - d.ideal_value());
        REQUIRE(obj(x) == Approx(expected).margin(1e-12));
    }
    REQUIRE(found == 5);
}

TEST_CASE("local minimization on a quadratic bowl", "[optimize]") {
    const auto bowl = [](const ParameterVector& x) {
        double s = 0.0;
        for (const double v : x.values) s += (v - 1.0) * (v - 1.0);
        return s;
    };
    ParameterVector x0{{0.0, 0.0, 0.0, 0.0, 0.0}, false};
    const auto res = local_minimize(bowl, x0, quick_config(1, 0, 2000));
    CHECK(res.converged);
    for (const double v : res.x.values) CHECK(v == Approx(1.0).margin(1e-6));
}

TEST_CASE("local minimization honors its contracts", "[optimize]") {
    const auto f = BellFunctional::chsh();
    const SearchConfig cfg = quick_config(1, 0, 600);
    const auto obj = objective(f, DetectorModel::Symmetric, NoiseSpec::colored_pp(0.0),
                               ThetaMode::fixed(pi / 4), cfg);

    SECTION("never returns a value above the start") {
        for (int i = 0; i < 10; ++i) {
            const auto x0 = draw_start(13, i, 2, 2, ThetaMode::fixed(pi / 4));
            const auto res = local_minimize(obj, x0, cfg);
            REQUIRE(res.value <= obj(x0) + 1e-12);
        }
    }
    SECTION("basin membership near the analytic optimum") {
        SplitMix64 rng(4242);
        for (int k = 0; k < 5; ++k) {
            ParameterVector x0 = tsirelson_vector();
            for (auto& v : x0.values) v += rng.uniform(-0.05, 0.05);
            const auto res = local_minimize(obj, x0, cfg);
            REQUIRE(res.value <= 0.8285);
        }
    }
    SECTION("plateau starts finish at the sentinel or flag non-convergence") {
        const auto res = local_minimize(obj, plateau_vector(), cfg);
        CHECK((res.value == no_violation_objective || !res.converged));
    }
    SECTION("non-finite objectives abandon the trajectory") {
        int calls = 0;
        const auto exploding = [&calls](const ParameterVector& x) {
            ++calls;
            return calls > 3 ? std::nan("") : x.values[0] * x.values[0];
        };
        ParameterVector x0{{2.0, 0.0}, false};
        const auto res = local_minimize(exploding, x0, quick_config(1, 0));
        CHECK_FALSE(res.converged);
    }
}

TEST_CASE("start vectors are reproducible and in range", "[optimize]") {
    for (int i : {0, 1, 7, 999}) {
        const auto a = draw_start(123, i, 3, 3, ThetaMode::free());
        const auto b = draw_start(123, i, 3, 3, ThetaMode::free());
        REQUIRE(a.values == b.values);
        REQUIRE(a.values.size() == 13);
        for (int j = 0; j < 12; ++j) {
            REQUIRE(a.values[j] >= 0.0);
            REQUIRE(a.values[j] < 2 * pi);
        }
        REQUIRE(a.values[12] > 0.0);
        REQUIRE(a.values[12] < pi / 2);
    }
    const auto c = draw_start(124, 0, 3, 3, ThetaMode::free());
    const auto d = draw_start(123, 0, 3, 3, ThetaMode::free());
    REQUIRE(c.values != d.values);
}

TEST_CASE("multistart determinism and certified reporting", "[optimize]") {
    const auto f = BellFunctional::chsh();
    const NoiseSpec noise = NoiseSpec::colored_pp(0.05);
    const SearchConfig cfg = quick_config(40, 99, 300);

    const auto o1 = multistart(f, DetectorModel::Symmetric, noise, ThetaMode::free(), cfg);
    const auto o2 = multistart(f, DetectorModel::Symmetric, noise, ThetaMode::free(), cfg);
    SECTION("bit-identical outcomes for identical configs") {
        REQUIRE(o1.best.values == o2.best.values);
        REQUIRE(o1.best_objective == o2.best_objective);
        REQUIRE(o1.ideal_value == o2.ideal_value);
        REQUIRE(o1.converged_fraction == o2.converged_fraction);
        REQUIRE(o1.distinct_minima == o2.distinct_minima);
    }
    SECTION("parallel and serial runs agree bit for bit") {
        SearchConfig serial = cfg;
        serial.jobs = 1;
        const auto os = multistart(f, DetectorModel::Symmetric, noise, ThetaMode::free(), serial);
        REQUIRE(os.best.values == o1.best.values);
        REQUIRE(os.best_objective == o1.best_objective);
    }
    SECTION("reported fields match recomputation") {
        const auto d = evaluate(f, make_noisy(o1.theta, noise), decode_settings(o1.best, 2, 2));
        REQUIRE(d.ideal_value() == Approx(o1.ideal_value).margin(1e-10));
        const auto ec = eta_crit(d, DetectorModel::Symmetric);
        REQUIRE(ec.violation() == o1.eta.violation());
        REQUIRE(ec.value() == Approx(o1.eta.value()).margin(1e-10));
    }
    SECTION("more starts never worsen the best objective") {
        SearchConfig half = cfg;
        half.n_starts = 20;
        const auto oh = multistart(f, DetectorModel::Symmetric, noise, ThetaMode::free(), half);
        REQUIRE(o1.best_objective <= oh.best_objective);
    }
}

TEST_CASE("finite-difference step sits in the stable regime", "[optimize]") {
    const auto f = BellFunctional::chsh();
    const SearchConfig cfg = quick_config(1, 0);
    const auto obj = objective(f, DetectorModel::Symmetric, NoiseSpec::colored_pp(0.0),
                               ThetaMode::fixed(pi / 4), cfg);

    auto grad_with_step = [&](const ParameterVector& x, double h, std::vector<double>& g) {
        ParameterVector probe = x;
        for (std::size_t i = 0; i < x.values.size(); ++i) {
            probe.values[i] = x.values[i] + h;
            const double fp = obj(probe);
            probe.values[i] = x.values[i] - h;
            const double fm = obj(probe);
            probe.values[i] = x.values[i];
            if (fp >= no_violation_objective || fm >= no_violation_objective) return false;
            g[i] = (fp - fm) / (2.0 * h);
        }
        return true;
    };

    int accepted = 0;
    std::vector<double> g5(8), g7(8);
    for (int i = 0; accepted < 20 && i < 4000; ++i) {
        const auto x = draw_start(2025, i, 2, 2, ThetaMode::fixed(pi / 4));
        if (obj(x) >= no_violation_objective) continue;
        if (!grad_with_step(x, 1e-5, g5) || !grad_with_step(x, 1e-7, g7)) continue;
        double n5 = 0, n7 = 0, diff = 0;
        for (int j = 0; j < 8; ++j) {
            n5 += g5[j] * g5[j];
            n7 += g7[j] * g7[j];
            diff += (g5[j] - g7[j]) * (g5[j] - g7[j]);
        }
        n5 = std::sqrt(n5);
        n7 = std::sqrt(n7);
        if (std::max(n5, n7) < 1e-4) continue;
        ++accepted;
        REQUIRE(std::sqrt(diff) <= 1e-3 * std::max(n5, n7));
    }
    REQUIRE(accepted == 20);
}

TEST_CASE("multistart reference thresholds", "[optimize][slow]") {
    SECTION("two-setting symmetric, partially entangled limit") {
        const auto out = multistart(BellFunctional::chsh(), DetectorModel::Symmetric,
                                    NoiseSpec::colored_pp(0.0), ThetaMode::free(),
                                    quick_config(300, 42, 2000));
        REQUIRE(out.eta.violation());
        CHECK(out.eta.value() > 0.664);
        CHECK(out.eta.value() < 0.672);
    }
    SECTION("two-setting one-sided, partially entangled limit") {
        const auto out = multistart(BellFunctional::chsh(), DetectorModel::OneSidedPerfect,
                                    NoiseSpec::colored_pp(0.0), ThetaMode::free(),
                                    quick_config(300, 42, 2000));
        REQUIRE(out.eta.violation());
        CHECK(out.eta.value() > 0.497);
        CHECK(out.eta.value() < 0.505);
    }
    SECTION("three-setting one-sided, partially entangled limit") {
        const auto out = multistart(BellFunctional::i3322(), DetectorModel::OneSidedPerfect,
                                    NoiseSpec::colored_ap(0.0), ThetaMode::free(),
                                    quick_config(300, 42, 2000));
        REQUIRE(out.eta.violation());
        CHECK(out.eta.value() > 0.425);
        CHECK(out.eta.value() < 0.437);
    }
    SECTION("four-setting symmetric at maximal entanglement is stable") {
        const auto out = multistart(BellFunctional::a5(), DetectorModel::Symmetric,
                                    NoiseSpec::colored_pp(0.0), ThetaMode::fixed(pi / 4),
                                    quick_config(200, 42, 2000));
        REQUIRE(out.eta.violation());
        CHECK(out.eta.value() > 0.870);
        CHECK(out.eta.value() < 0.877);
    }
    SECTION("free theta never loses to a fixed one") {
        const SearchConfig cfg = quick_config(200, 7, 800);
        const auto free_run = multistart(BellFunctional::chsh(), DetectorModel::Symmetric,
                                         NoiseSpec::colored_pp(0.0), ThetaMode::free(), cfg);
        for (const double theta : {pi / 4, std::atan(0.2041)}) {
            const auto fixed_run =
                multistart(BellFunctional::chsh(), DetectorModel::Symmetric,
                           NoiseSpec::colored_pp(0.0), ThetaMode::fixed(theta), cfg);
            REQUIRE(free_run.best_objective <= fixed_run.best_objective + 1e-9);
        }
    }
}
