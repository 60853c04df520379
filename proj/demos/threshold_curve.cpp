// Minimal library walkthrough: trace the CHSH threshold efficiency against
// the colored-noise level in the photon-photon scenario and print CSV.
#include <cstdio>

#include "bellnoise/optimize.hpp"

int main() {
    using namespace bellnoise;

    SearchConfig cfg;
    cfg.n_starts = 150;
    cfg.seed = 1;
    cfg.max_iterations = 800;
    cfg.jobs = 2;

    const auto chsh = BellFunctional::chsh();
    std::printf("p,eta_crit,ideal_value,cs\n");
    for (double p = 0.0; p <= 0.20 + 1e-12; p += 0.05) {
        const auto out = multistart(chsh, DetectorModel::Symmetric, NoiseSpec::colored_pp(p),
                                    ThetaMode::free(), cfg);
        const double c = std::cos(out.theta), s = std::sin(out.theta);
        std::printf("%.2f,%.6f,%.6f,%.4f\n", p, out.eta.violation() ? out.eta.value() : -1.0,
                    out.ideal_value, std::min(c, s) / std::max(c, s));
    }
    return 0;
}
