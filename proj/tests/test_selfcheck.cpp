#include <catch2/catch.hpp>

#include "bellnoise/selfcheck.hpp"

TEST_CASE("fast invariant suite is green", "[selfcheck][slow]") {
    const auto results = bellnoise::run_self_checks(1);
    REQUIRE(results.size() == 6);
    for (const auto& r : results) {
        INFO(r.name << (r.detail.empty() ? "" : ": " + r.detail));
        CHECK(r.pass);
    }
}
