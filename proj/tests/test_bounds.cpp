#include "catch_amalgamated.hpp"

#include <vector>

#include "bcp/bounds.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

bcp::BoundParams params(std::size_t n, double s_min, double s_max, double delta,
                        std::optional<double> mu = std::nullopt) {
    return {n, s_min, s_max, delta, mu};
}

}  // namespace

TEST_CASE("observable bound value", "[bounds]") {
    // mpmath: 0.16971789770715 + 0.14802071873008 + 0.25191302388426
    const double r = bcp::r_delta(params(100, 1, 1, 0.05));
    CHECK_THAT(r, WithinAbs(0.56967, 5e-4));
    CHECK_THAT(r, WithinAbs(0.56965164032149531, 1e-13));
    CHECK_THAT(bcp::r_delta(params(1000, 0.5, 2, 0.1)), WithinRel(2.0338848601779017, 1e-12));
}

TEST_CASE("bound with mu", "[bounds]") {
    CHECK_THAT(bcp::explicit_bound_with_mu(params(100, 1, 1, 0.05, 1.0)), WithinAbs(0.56967, 5e-4));
    CHECK_THAT(bcp::explicit_bound_with_mu(params(1000, 0.5, 2, 0.1, 1.0)),
               WithinRel(1.0384159005062877, 1e-12));

    // mu = s_min reproduces the observable bound exactly.
    for (double s_min : {0.1, 0.5, 1.0}) {
        for (std::size_t n : {50u, 300u, 4000u}) {
            const auto p = params(n, s_min, 3.0, 0.05, s_min);
            CHECK(bcp::explicit_bound_with_mu(p) == bcp::r_delta(p));
        }
    }

    // Doubling mu halves the two mu-dependent terms.
    const auto p1 = params(500, 0.5, 1.5, 0.1, 1.0);
    const auto p2 = params(500, 0.5, 1.5, 0.1, 2.0);
    const double hoeffding = std::sqrt(std::log(4.0 / 0.1) / 1000.0);
    CHECK_THAT(bcp::explicit_bound_with_mu(p2) - hoeffding,
               WithinRel((bcp::explicit_bound_with_mu(p1) - hoeffding) / 2.0, 1e-12));
    CHECK(bcp::explicit_bound_with_mu(p2) < bcp::explicit_bound_with_mu(p1));

    CHECK_THROWS_AS(bcp::explicit_bound_with_mu(params(100, 1, 1, 0.05)), bcp::Error);
    CHECK_THROWS_AS(bcp::explicit_bound_with_mu(params(100, 1, 1, 0.05, 0.0)), bcp::Error);
}

TEST_CASE("bounds are monotone, positive and majorised", "[bounds][property]") {
    for (double s_min : {0.2, 0.5, 1.0}) {
        for (double s_max : {1.0, 2.0, 5.0}) {
            if (s_max < s_min) continue;
            double prev_n = INFINITY;
            for (std::size_t n : {30u, 50u, 100u, 200u, 500u, 1000u, 5000u, 100000u}) {
                if (static_cast<double>(n) <= s_max / s_min) continue;
                double prev_delta = INFINITY;
                for (double delta : {0.001, 0.01, 0.05, 0.1, 0.5, 0.9}) {
                    const double r = bcp::r_delta(params(n, s_min, s_max, delta));
                    CHECK(r > 0.0);
                    CHECK(r < prev_delta);
                    prev_delta = r;
                    for (double mu : {s_min, 0.5 * (s_min + s_max), s_max}) {
                        const double b = bcp::explicit_bound_with_mu(params(n, s_min, s_max, delta, mu));
                        CHECK(b > 0.0);
                        CHECK(b <= r);
                    }
                }
                const double r = bcp::r_delta(params(n, s_min, s_max, 0.05));
                CHECK(r < prev_n);
                prev_n = r;
            }
        }
    }
}

TEST_CASE("bound preconditions", "[bounds]") {
    try {
        bcp::r_delta(params(2, 1, 2, 0.05));
        FAIL("expected precondition error");
    } catch (const bcp::Error& e) {
        CHECK(e.code() == bcp::ErrorCode::precondition);
    }
    CHECK_THROWS_AS(bcp::r_delta(params(100, 0, 1, 0.05)), bcp::Error);
    CHECK_THROWS_AS(bcp::r_delta(params(100, 2, 1, 0.05)), bcp::Error);
    CHECK_THROWS_AS(bcp::r_delta(params(100, 1, 1, 0.0)), bcp::Error);
    CHECK_THROWS_AS(bcp::r_delta(params(100, 1, 1, 1.0)), bcp::Error);
}

TEST_CASE("trust decision", "[bounds]") {
    auto t = bcp::trust_decision(0.05, 0.02, 0.90);
    CHECK_THAT(t.lower_coverage, WithinAbs(0.93, 1e-12));
    CHECK(t.decision == bcp::TrustDecision::trust);

    CHECK(bcp::trust_decision(0.05, 0.02, 0.95).decision == bcp::TrustDecision::reject);

    t = bcp::trust_decision(0.05, 0.05, 0.90);
    CHECK_THAT(t.lower_coverage, WithinAbs(0.90, 1e-12));
    CHECK(t.decision == bcp::TrustDecision::trust);

    CHECK(bcp::trust_decision(0.05, 0.0501, 0.90).decision == bcp::TrustDecision::reject);
    CHECK_THROWS_AS(bcp::trust_decision(NAN, 0.1, 0.9), bcp::Error);
    CHECK_THROWS_AS(bcp::trust_decision(0.1, 0.1, 1.0), bcp::Error);
}
