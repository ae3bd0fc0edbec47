#include "catch_amalgamated.hpp"

#include <filesystem>
#include <fstream>
#include <random>

#include "bcp/harness.hpp"
#include "bcp/report.hpp"

namespace fs = std::filesystem;
using Catch::Matchers::WithinAbs;

namespace {

bcp::TrialConfig synthetic(std::size_t n, std::size_t k, double signal, std::size_t trials,
                           bcp::RuleSpec rule = bcp::ConstantRule{1}) {
    bcp::TrialConfig c;
    c.n = n;
    c.num_labels = k;
    c.source = bcp::SyntheticSource{signal};
    c.num_trials = trials;
    c.master_seed = 20251019;
    c.rule = rule;
    return c;
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "bcp_harness_tests";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("synthetic draws are deterministic", "[harness]") {
    bcp::Rng a = bcp::trial_stream(42, 3), b = bcp::trial_stream(42, 3);
    const auto x = bcp::gen_synthetic_scores(50, 6, 1.5, a);
    const auto y = bcp::gen_synthetic_scores(50, 6, 1.5, b);
    CHECK(x.cal == y.cal);
    CHECK(x.embeddings == y.embeddings);
    CHECK(x.test_scores == y.test_scores);
    CHECK(x.test_label == y.test_label);

    bcp::Rng c = bcp::trial_stream(42, 4);
    CHECK_FALSE(bcp::gen_synthetic_scores(50, 6, 1.5, c).cal == x.cal);
}

TEST_CASE("synthetic draws are valid scores", "[harness]") {
    bcp::Rng rng = bcp::trial_stream(1, 1);
    const auto d = bcp::gen_synthetic_scores(30, 4, 0.0, rng);
    CHECK(d.cal.size() == 30);
    CHECK(d.embeddings.rows() == 30);
    CHECK(d.embeddings.dim() == 4);
    CHECK(d.test_scores.size() == 4);
    CHECK(d.test_label < 4);
    for (double v : d.cal.scores().matrix().values()) CHECK(v > 0.0);
    CHECK_THROWS_AS(bcp::gen_synthetic_scores(10, 1, 0.0, rng), bcp::Error);
    CHECK_THROWS_AS(bcp::gen_synthetic_scores(10, 3, -1.0, rng), bcp::Error);
}

TEST_CASE("strong signal gives near-certain coverage with singletons", "[harness][montecarlo]") {
    const auto s = bcp::run_experiment(synthetic(200, 10, 20.0, 300));
    CHECK(s.empirical_coverage >= 0.99);
    CHECK(s.mean_alpha_tilde < 0.2);
    for (const auto& r : s.records) CHECK(r.set_size <= 1);
}

TEST_CASE("trials honour the hard cap and are reproducible", "[harness]") {
    const auto cfg = synthetic(60, 5, 1.0, 50);
    const bcp::Experiment exp(cfg);
    for (std::size_t i = 0; i < cfg.num_trials; ++i) {
        const auto r = exp.run_trial(i);
        if (!r.degenerate) CHECK(r.set_size <= r.cap);
        CHECK(r.cap == 1);
        CHECK(r.miss_over_alpha >= 0.0);
        CHECK(r.miss_over_alpha <= 1.0 / r.alpha_tilde);
        const auto again = bcp::run_trial(cfg, i);
        CHECK(again.alpha_tilde == r.alpha_tilde);
        CHECK(again.alpha_loo == r.alpha_loo);
        CHECK(again.covered == r.covered);
    }
}

TEST_CASE("csv pool reproduces the hand-computed estimate", "[harness]") {
    const auto path = scratch("pool.csv");
    std::ofstream(path) << "label,s0,s1\n0,1,4\n0,2,5\n0,3,6\n1,2.5,0.5\n";
    bcp::TrialConfig cfg;
    cfg.n = 3;
    cfg.source = bcp::CsvSource{path, std::nullopt};
    cfg.num_trials = 64;
    cfg.master_seed = 5;
    const auto summary = bcp::run_experiment(cfg);
    std::size_t hits = 0;
    for (const auto& r : summary.records) {
        REQUIRE(r.test_row);
        if (*r.test_row == 3) {
            ++hits;
            CHECK_THAT(r.alpha_loo, WithinAbs(0.61667, 1e-5));
        }
    }
    CHECK(hits > 0);

    cfg.n = 4;
    CHECK_THROWS_AS(bcp::Experiment(cfg), bcp::Error);
}

TEST_CASE("experiment aggregation", "[harness]") {
    auto cfg = synthetic(40, 4, 1.0, 1);
    cfg.bisect_check = true;
    const auto one = bcp::run_experiment(cfg);
    const auto& r = one.records.at(0);
    CHECK(one.mean_alpha_tilde == r.alpha_tilde);
    CHECK(one.mean_alpha_loo == r.alpha_loo);
    CHECK(one.empirical_coverage == (r.covered ? 1.0 : 0.0));
    CHECK(one.posthoc_ratio_mean == r.miss_over_alpha);
    REQUIRE(r.bisect_alpha);
    CHECK(std::abs(*r.bisect_alpha - r.alpha_tilde) <= 0.005);

    cfg.num_trials = 137;
    const auto many = bcp::run_experiment(cfg);
    std::size_t a = 0, b = 0;
    for (std::size_t i = 0; i < bcp::histogram_bins; ++i) {
        a += many.histogram.one_minus_alpha[i];
        b += many.histogram.one_minus_loo[i];
    }
    CHECK(a == 137);
    CHECK(b == 137);
    CHECK(many.max_bisect_error <= 0.005);
    CHECK(many.cap_violations == 0);
}

TEST_CASE("results do not depend on the thread count", "[harness]") {
    auto cfg = synthetic(80, 6, 1.0, 40, bcp::EntropyRuleSpec{10, 1, 3, 0.5});
    cfg.threads = 1;
    const auto serial = bcp::dump17(bcp::to_json(bcp::run_experiment(cfg)));
    cfg.threads = 4;
    const auto parallel = bcp::dump17(bcp::to_json(bcp::run_experiment(cfg)));
    CHECK(serial == parallel);
}

TEST_CASE("coverage clears the first-order bound", "[harness][montecarlo]") {
    const auto s = bcp::run_experiment(synthetic(200, 10, 2.0, 2000));
    INFO("coverage " << s.empirical_coverage << " mean alpha " << s.mean_alpha_tilde);
    CHECK(s.empirical_coverage >= 1.0 - s.mean_alpha_tilde - 0.02);
    CHECK(s.posthoc_ratio_mean <= 1.05);
}

TEST_CASE("post-hoc validity check", "[harness]") {
    std::vector<bcp::TrialRecord> covered(5);
    for (auto& r : covered) r.covered = true;
    CHECK(bcp::posthoc_validity_check(covered) == 0.0);

    std::vector<bcp::TrialRecord> miss(1);
    miss[0].alpha_tilde = 1.0;
    miss[0].degenerate = true;
    miss[0].miss_over_alpha = 1.0;
    CHECK(bcp::posthoc_validity_check(miss) == 1.0);

    CHECK_THROWS_AS(bcp::posthoc_validity_check({}), bcp::Error);
}

TEST_CASE("stability diagnostic degenerates on identical rows", "[harness]") {
    const bcp::CalibrationSet cal(bcp::ScoreMatrix(bcp::Matrix(6, 3, 0.4)), {0, 1, 2, 0, 1, 2});
    bcp::StabilityReference ref{1.0, {1.0, 1.0, 1.0}};
    const auto st = bcp::stability_diagnostic(cal, bcp::ConstantRule{1}, nullptr, &ref);
    CHECK(st.degenerate);
    CHECK(std::isinf(st.value));
    CHECK(st.numerator < bcp::stability_floor);
    CHECK_FALSE(st.note.empty());

    CHECK_THROWS_AS(bcp::stability_diagnostic(cal, bcp::ConstantRule{1}, nullptr, nullptr), bcp::Error);
}

TEST_CASE("stability diagnostic on synthetic data is finite", "[harness]") {
    const bcp::SyntheticSetting setting{200, 5, 1.5, bcp::ConstantRule{1}};
    const auto ref = bcp::reference_estimates(setting, 2000, 77);
    bcp::Rng rng = bcp::trial_stream(78, 0);
    const auto draw = bcp::gen_synthetic_scores(200, 5, 1.5, rng);
    const auto st = bcp::stability_diagnostic(draw.cal, bcp::ConstantRule{1}, nullptr, &ref);
    CHECK_FALSE(st.degenerate);
    CHECK(std::isfinite(st.value));
    CHECK(st.value > 0.0);
}

TEST_CASE("fixed-level sets", "[harness][montecarlo]") {
    const bcp::SyntheticSetting setting{50, 5, 1.0, bcp::ConstantRule{1}};
    CHECK(bcp::markov_coverage(setting, 0.2, 3000, 3) >= 0.78);
}
