// Command-line front end: simulate, run, loo, bound, generate.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bcp/bcp.hpp"

namespace {

using bcp::Json;

struct Inputs {
    bcp::CalibrationSet cal;
    std::optional<bcp::EmbeddingMatrix> embeddings;
};

Inputs load_inputs(const std::string& scores, const std::string& embeddings) {
    Inputs in{bcp::load_scores_csv(scores), std::nullopt};
    if (!embeddings.empty()) {
        in.embeddings = bcp::load_embeddings_csv(embeddings);
        if (in.embeddings->rows() != in.cal.size()) {
            throw bcp::Error(bcp::ErrorCode::shape_mismatch,
                             "embedding file has " + std::to_string(in.embeddings->rows()) +
                                 " rows, score file has " + std::to_string(in.cal.size()));
        }
    }
    return in;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, std::size_t threads) {
    bcp::TrialConfig config = bcp::load_config(config_path);
    if (threads > 0) config.threads = threads;
    const auto summary = bcp::run_experiment(config);
    bcp::write_outputs(summary, out_dir);

    Json brief = bcp::to_json(summary);
    brief.erase("records");
    brief.erase("histogram");
    std::cout << bcp::dump17(brief, 2) << '\n';
    return 0;
}

int cmd_run(const std::string& scores, const std::string& embeddings, const std::string& rule_text,
            std::size_t test_row, bool bisect, double tol) {
    const Inputs pool = load_inputs(scores, embeddings);
    if (test_row >= pool.cal.size()) {
        throw bcp::Error(bcp::ErrorCode::invalid_argument,
                         "test row " + std::to_string(test_row) + " outside [0, " +
                             std::to_string(pool.cal.size()) + ")");
    }
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < pool.cal.size(); ++i) {
        if (i != test_row) rows.push_back(i);
    }
    const bcp::CalibrationSet cal = pool.cal.subset(rows);
    std::optional<bcp::EmbeddingMatrix> emb;
    std::optional<std::span<const double>> test_emb;
    if (pool.embeddings) {
        emb = pool.embeddings->subset(rows);
        test_emb = pool.embeddings->row(test_row);
    }
    const bcp::EmbeddingMatrix* emb_ptr = emb ? &*emb : nullptr;
    const bcp::SizeRule rule = bcp::fit_rule(bcp::parse_rule_text(rule_text), cal, emb_ptr);
    const auto test_scores = pool.cal.scores().row(test_row);
    const auto result = bcp::backward_predict(cal, rule, test_scores, emb_ptr, test_emb);

    Json out = bcp::to_json(result.miscoverage);
    const std::size_t label = pool.cal.labels()[test_row];
    out["test_row"] = test_row;
    out["test_label"] = label;
    out["covered"] = bcp::detail::contains(result.miscoverage.set_indices, label);
    out["ratios"] = result.test_ratios.ratios;
    out["alpha_loo"] = result.loo.alpha_loo;
    out["estimated_coverage"] = 1.0 - result.loo.alpha_loo;
    if (bisect) out["bisect_alpha"] = bcp::adaptive_alpha_bisect(result.test_ratios, result.miscoverage.cap, tol);
    std::cout << bcp::dump17(out) << '\n';
    return 0;
}

int cmd_loo(const std::string& scores, const std::string& embeddings, const std::string& rule_text) {
    const Inputs in = load_inputs(scores, embeddings);
    const bcp::EmbeddingMatrix* emb_ptr = in.embeddings ? &*in.embeddings : nullptr;
    const bcp::SizeRule rule = bcp::fit_rule(bcp::parse_rule_text(rule_text), in.cal, emb_ptr);
    std::cout << bcp::dump17(bcp::to_json(bcp::loo_estimator(in.cal, rule, emb_ptr))) << '\n';
    return 0;
}

int cmd_bound(const bcp::BoundParams& params, std::optional<double> alpha_loo,
              std::optional<double> tau) {
    Json out;
    const double r = bcp::r_delta(params);
    out["r_delta"] = r;
    if (params.mu) out["bound_with_mu"] = bcp::explicit_bound_with_mu(params);
    out["params"] = bcp::to_json(params);
    out["caveat"] = bcp::bound_caveat;
    if (alpha_loo && tau) {
        out["trust"] = bcp::to_json(bcp::trust_decision(*alpha_loo, r, *tau));
    } else if (alpha_loo || tau) {
        throw bcp::Error(bcp::ErrorCode::invalid_argument,
                         "--alpha-loo and --tau must be given together");
    }
    std::cout << bcp::dump17(out) << '\n';
    return 0;
}

int cmd_generate(std::size_t n, std::size_t k, double signal, std::uint64_t seed,
                 const std::string& scores, const std::string& embeddings) {
    if (n < 2) throw bcp::Error(bcp::ErrorCode::invalid_argument, "generate needs n >= 2");
    bcp::Rng rng = bcp::trial_stream(seed, 0);
    // n - 1 calibration points plus the test point make an n-row pool.
    auto draw = bcp::gen_synthetic_scores(n - 1, k, signal, rng);
    std::vector<std::vector<double>> score_rows, emb_rows;
    std::vector<std::size_t> labels(draw.cal.labels().begin(), draw.cal.labels().end());
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto s = draw.cal.scores().row(i);
        const auto e = draw.embeddings.row(i);
        score_rows.emplace_back(s.begin(), s.end());
        emb_rows.emplace_back(e.begin(), e.end());
    }
    score_rows.push_back(draw.test_scores);
    emb_rows.push_back(draw.test_embedding);
    labels.push_back(draw.test_label);

    const bcp::CalibrationSet pool(bcp::ScoreMatrix::from_rows(score_rows), std::move(labels));
    bcp::write_file(scores, bcp::write_scores_csv, pool);
    if (!embeddings.empty()) {
        bcp::write_file(embeddings, bcp::write_embeddings_csv,
                        bcp::EmbeddingMatrix::from_rows(emb_rows));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Backward conformal prediction: size-capped sets, adaptive miscoverage, "
                 "leave-one-out coverage estimates"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    std::size_t threads = 0;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo experiment from a JSON config");
    simulate->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    simulate->add_option("--out", out_dir, "directory for summary.json, histogram.csv, trials.csv");
    simulate->add_option("--threads", threads, "worker threads (0: all cores)");

    std::string scores, embeddings, rule_text;
    std::size_t test_row = 0;
    bool bisect = false;
    double tol = 0.005;
    auto* run = app.add_subcommand("run", "single pass with one score row as test point");
    run->add_option("--scores", scores, "score CSV")->required();
    run->add_option("--embeddings", embeddings, "embedding CSV");
    run->add_option("--rule", rule_text, "rule JSON (inline or file)")->required();
    run->add_option("--test-row", test_row, "0-based data row used as test point")->required();
    run->add_flag("--bisect", bisect, "also report the binary-search alpha");
    run->add_option("--tol", tol, "binary-search tolerance");

    auto* loo = app.add_subcommand("loo", "leave-one-out miscoverage estimate");
    loo->add_option("--scores", scores, "score CSV")->required();
    loo->add_option("--embeddings", embeddings, "embedding CSV");
    loo->add_option("--rule", rule_text, "rule JSON (inline or file)")->required();

    bcp::BoundParams params;
    std::optional<double> mu, alpha_loo, tau;
    auto* bound = app.add_subcommand("bound", "finite-sample bound and trust decision");
    bound->add_option("--n", params.n, "calibration size")->required();
    bound->add_option("--smin", params.s_min, "lower score bound")->required();
    bound->add_option("--smax", params.s_max, "upper score bound")->required();
    bound->add_option("--delta", params.delta, "failure probability")->required();
    bound->add_option("--mu", mu, "expected score, if known");
    bound->add_option("--alpha-loo", alpha_loo, "leave-one-out miscoverage estimate");
    bound->add_option("--tau", tau, "target coverage");

    std::size_t gen_n = 1000, gen_k = 10;
    double signal = 2.0;
    std::uint64_t seed = 0;
    std::string gen_scores, gen_embeddings;
    auto* generate = app.add_subcommand("generate", "write a synthetic score pool");
    generate->add_option("--n", gen_n, "rows");
    generate->add_option("--K", gen_k, "labels");
    generate->add_option("--signal", signal, "logit shift of the true label");
    generate->add_option("--seed", seed, "seed");
    generate->add_option("--scores", gen_scores, "output score CSV")->required();
    generate->add_option("--embeddings", gen_embeddings, "output embedding CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate) return cmd_simulate(config_path, out_dir, threads);
        if (*run) return cmd_run(scores, embeddings, rule_text, test_row, bisect, tol);
        if (*loo) return cmd_loo(scores, embeddings, rule_text);
        if (*bound) {
            params.mu = mu;
            return cmd_bound(params, alpha_loo, tau);
        }
        if (*generate) return cmd_generate(gen_n, gen_k, signal, seed, gen_scores, gen_embeddings);
    } catch (const bcp::Error& e) {
        std::cerr << "bcp: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "bcp: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
