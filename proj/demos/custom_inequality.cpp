// Define a Bell functional from text, evaluate it at hand-picked settings,
// and read off the detection threshold for both detector models.
#include <cstdio>

#include "bellnoise/detection.hpp"
#include "bellnoise/inequality.hpp"

int main() {
    using namespace bellnoise;

    const auto chsh = BellFunctional::parse(R"(# CH form of the two-setting inequality
settings A=2 B=2
J 0 0 1
J 0 1 1
J 1 0 1
J 1 1 -1
MA 0 -1
MB 0 -1
bound 0
)");

    const TwoQubitState rho = make_pure(pi / 4);
    const SettingsAssignment tsirelson{
        {{0.0, 0.0}, {pi / 4, 0.0}},
        {{3 * pi / 8, 0.0}, {5 * pi / 8, 0.0}},
    };
    const auto d = evaluate(chsh, rho, tsirelson);
    std::printf("J = %.6f, K_A = %.6f, K_B = %.6f, ideal = %.6f\n", d.j, d.k_a, d.k_b,
                d.ideal_value());
    for (const auto model : {DetectorModel::Symmetric, DetectorModel::OneSidedPerfect}) {
        const auto ec = eta_crit(d, model);
        std::printf("%-18s eta_crit = %s\n", to_string(model),
                    ec.violation() ? std::to_string(ec.value()).c_str() : "no violation");
    }
    return 0;
}
