#ifndef BCP_HARNESS_HPP
#define BCP_HARNESS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "bcp/backward.hpp"
#include "bcp/bounds.hpp"
#include "bcp/csv.hpp"
#include "bcp/error.hpp"
#include "bcp/evalues.hpp"
#include "bcp/loo.hpp"
#include "bcp/rules.hpp"
#include "bcp/scores.hpp"

namespace bcp {

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

/// Independent stream for one trial, a pure function of (seed, index) so that
/// serial and parallel runs agree bit for bit.
inline Rng trial_stream(std::uint64_t master_seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

// ---------------------------------------------------------------------------
// Synthetic scores
// ---------------------------------------------------------------------------

/// n calibration points plus one test point, all i.i.d.
struct SyntheticDraw {
    CalibrationSet cal;
    EmbeddingMatrix embeddings;  // the logits, one row per calibration point
    std::vector<double> test_scores;
    std::size_t test_label = 0;
    std::vector<double> test_embedding;
};

/// Each point: label uniform on [0, K), logits z_y ~ N(signal * 1{y = label}, 1),
/// probabilities softmax(z), scores -ln p (clamped). The logits double as the
/// point's embedding for the entropy rule.
inline SyntheticDraw gen_synthetic_scores(std::size_t n, std::size_t num_labels, double signal,
                                          Rng& rng) {
    if (n < 1) throw Error(ErrorCode::invalid_argument, "synthetic draw needs n >= 1");
    if (num_labels < 2) throw Error(ErrorCode::too_few_labels, "synthetic draw needs K >= 2");
    if (!(signal >= 0.0) || !std::isfinite(signal)) {
        throw Error(ErrorCode::invalid_argument, "signal must be finite and nonnegative");
    }
    const std::size_t total = n + 1;
    std::uniform_int_distribution<std::size_t> pick_label(0, num_labels - 1);
    std::normal_distribution<double> noise(0.0, 1.0);

    Matrix logits(total, num_labels);
    Matrix probs(total, num_labels);
    std::vector<std::size_t> labels(total);
    for (std::size_t i = 0; i < total; ++i) {
        labels[i] = pick_label(rng);
        auto z = logits.row(i);
        for (std::size_t y = 0; y < num_labels; ++y) {
            z[y] = noise(rng) + (y == labels[i] ? signal : 0.0);
        }
        const double peak = *std::max_element(z.begin(), z.end());
        double norm = 0.0;
        auto p = probs.row(i);
        for (std::size_t y = 0; y < num_labels; ++y) {
            p[y] = std::exp(z[y] - peak);
            norm += p[y];
        }
        for (double& v : p) v /= norm;
    }
    const ScoreMatrix all = cross_entropy_scores(probs);

    SyntheticDraw out;
    std::vector<double> cal_values(all.matrix().values().begin(),
                                   all.matrix().values().begin() +
                                       static_cast<std::ptrdiff_t>(n * num_labels));
    out.test_label = labels[n];
    labels.pop_back();
    out.cal = CalibrationSet(ScoreMatrix(Matrix(n, num_labels, std::move(cal_values))),
                             std::move(labels));
    std::vector<double> emb_values(logits.values().begin(),
                                   logits.values().begin() +
                                       static_cast<std::ptrdiff_t>(n * num_labels));
    out.embeddings = EmbeddingMatrix(Matrix(n, num_labels, std::move(emb_values)));
    out.test_scores.assign(all.row(n).begin(), all.row(n).end());
    out.test_embedding.assign(logits.row(n).begin(), logits.row(n).end());
    return out;
}

// ---------------------------------------------------------------------------
// Configuration and records
// ---------------------------------------------------------------------------

struct SyntheticSource {
    double signal = 0.0;
};

/// Pool of scored points; each trial samples n + 1 of them without replacement.
struct CsvSource {
    std::filesystem::path score_path;
    std::optional<std::filesystem::path> embedding_path;
};

using DataSource = std::variant<SyntheticSource, CsvSource>;

struct TrialConfig {
    std::size_t n = 100;
    std::size_t num_labels = 10;  // ignored for csv sources, which carry K
    RuleSpec rule = ConstantRule{1};
    DataSource source = SyntheticSource{};
    std::size_t num_trials = 200;
    std::uint64_t master_seed = 0;
    bool bisect_check = false;
    double bisect_tol = 0.005;
    std::optional<BoundParams> bound;
    std::optional<double> tau;
    std::size_t threads = 0;  // 0: hardware concurrency; never affects results
};

struct TrialRecord {
    std::size_t trial = 0;
    double alpha_tilde = 1.0;
    bool covered = false;
    std::size_t set_size = 0;
    std::size_t cap = 0;
    bool degenerate = false;
    double alpha_loo = 1.0;
    double miss_over_alpha = 0.0;
    std::optional<double> bisect_alpha;
    std::optional<std::size_t> test_row;  // pool row used as test point (csv sources)
};

inline constexpr std::size_t histogram_bins = 20;

struct Histogram {
    std::array<std::size_t, histogram_bins> one_minus_alpha{};
    std::array<std::size_t, histogram_bins> one_minus_loo{};
};

struct ExperimentSummary {
    TrialConfig config;
    std::size_t num_trials = 0;
    double mean_alpha_tilde = 0.0;
    double mean_alpha_loo = 0.0;
    double empirical_coverage = 0.0;
    double posthoc_ratio_mean = 0.0;
    double mean_set_size = 0.0;
    std::size_t degenerate_trials = 0;
    std::size_t cap_violations = 0;
    double max_bisect_error = 0.0;
    std::optional<double> r_delta;
    std::optional<double> bound_with_mu;
    std::optional<double> trust_rate;
    Histogram histogram;
    std::vector<TrialRecord> records;
};

// ---------------------------------------------------------------------------
// Parallel map with a deterministic result layout
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t resolve_threads(std::size_t requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// out[i] = fn(i); workers take interleaved indices, results land by index.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, std::size_t threads, Fn&& fn) {
    std::vector<T> out(count);
    const std::size_t workers = std::min(resolve_threads(threads), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) out[i] = fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

inline bool contains(std::span<const std::size_t> sorted, std::size_t value) {
    return std::binary_search(sorted.begin(), sorted.end(), value);
}

inline std::size_t histogram_bin(double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return std::min(static_cast<std::size_t>(clamped * static_cast<double>(histogram_bins)),
                    histogram_bins - 1);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiment
// ---------------------------------------------------------------------------

/// One pass of the procedure on given data: cap, adaptive miscoverage and its
/// set for the test point, then the leave-one-out estimate.
struct BackwardResult {
    MiscoverageResult miscoverage;
    RatioVector test_ratios;
    LooEstimate loo;
};

inline BackwardResult backward_predict(const CalibrationSet& cal, const SizeRule& rule,
                                       std::span<const double> test_scores,
                                       const EmbeddingMatrix* embeddings = nullptr,
                                       std::optional<std::span<const double>> test_embedding =
                                           std::nullopt) {
    BackwardResult out;
    const std::size_t cap = apply_rule(rule, cal, test_embedding);
    out.test_ratios = test_ratio_vector(cal, test_scores);
    out.miscoverage = adaptive_alpha(out.test_ratios, cap);
    out.loo = loo_estimator(cal, rule, embeddings);
    return out;
}

/// Runs trials of a TrialConfig. CSV pools are loaded once at construction.
class Experiment {
public:
    explicit Experiment(TrialConfig config) : config_(std::move(config)) {
        if (config_.n < 2) {
            throw Error(ErrorCode::invalid_argument, "experiments need n >= 2");
        }
        if (config_.num_trials < 1) {
            throw Error(ErrorCode::invalid_argument, "experiments need at least one trial");
        }
        if (const auto* csv = std::get_if<CsvSource>(&config_.source)) {
            pool_ = load_scores_csv(csv->score_path);
            if (csv->embedding_path) {
                pool_embeddings_ = load_embeddings_csv(*csv->embedding_path);
                if (pool_embeddings_->rows() != pool_->size()) {
                    throw Error(ErrorCode::shape_mismatch,
                                "embedding file rows do not match the score file");
                }
            }
            if (pool_->size() <= config_.n) {
                throw Error(ErrorCode::invalid_argument,
                            "score pool of " + std::to_string(pool_->size()) +
                                " rows cannot supply n + 1 = " + std::to_string(config_.n + 1) +
                                " points");
            }
            config_.num_labels = pool_->num_labels();
        } else if (config_.num_labels < 2) {
            throw Error(ErrorCode::too_few_labels, "experiments need K >= 2");
        }
        if (is_adaptive(config_.rule) && std::holds_alternative<CsvSource>(config_.source) &&
            !pool_embeddings_) {
            throw Error(ErrorCode::missing_embeddings, "the entropy rule needs an embedding file");
        }
    }

    const TrialConfig& config() const noexcept { return config_; }

    TrialRecord run_trial(std::size_t trial_index) const {
        Rng rng = trial_stream(config_.master_seed, trial_index);
        TrialRecord rec;
        rec.trial = trial_index;

        CalibrationSet cal;
        std::optional<EmbeddingMatrix> emb;
        std::vector<double> test_scores;
        std::vector<double> test_embedding;
        std::size_t test_label = 0;

        if (const auto* syn = std::get_if<SyntheticSource>(&config_.source)) {
            auto draw = gen_synthetic_scores(config_.n, config_.num_labels, syn->signal, rng);
            cal = std::move(draw.cal);
            emb = std::move(draw.embeddings);
            test_scores = std::move(draw.test_scores);
            test_embedding = std::move(draw.test_embedding);
            test_label = draw.test_label;
        } else {
            const auto rows = sample_rows(rng);
            std::span<const std::size_t> cal_rows(rows.data(), config_.n);
            const std::size_t test_row = rows.back();
            cal = pool_->subset(cal_rows);
            if (pool_embeddings_) {
                emb = pool_embeddings_->subset(cal_rows);
                const auto r = pool_embeddings_->row(test_row);
                test_embedding.assign(r.begin(), r.end());
            }
            const auto s = pool_->scores().row(test_row);
            test_scores.assign(s.begin(), s.end());
            test_label = pool_->labels()[test_row];
            rec.test_row = test_row;
        }

        const EmbeddingMatrix* emb_ptr = emb ? &*emb : nullptr;
        const SizeRule rule = fit_rule(config_.rule, cal, emb_ptr);
        std::optional<std::span<const double>> test_emb;
        if (!test_embedding.empty()) test_emb = std::span<const double>(test_embedding);

        const BackwardResult result = backward_predict(cal, rule, test_scores, emb_ptr, test_emb);
        const auto& mis = result.miscoverage;
        rec.alpha_tilde = mis.alpha;
        rec.cap = mis.cap;
        rec.degenerate = mis.degenerate;
        rec.set_size = mis.set_indices.size();
        rec.covered = detail::contains(mis.set_indices, test_label);
        rec.miss_over_alpha = rec.covered ? 0.0 : 1.0 / mis.alpha;
        rec.alpha_loo = result.loo.alpha_loo;
        if (config_.bisect_check) {
            rec.bisect_alpha = adaptive_alpha_bisect(result.test_ratios, mis.cap, config_.bisect_tol);
        }
        return rec;
    }

    ExperimentSummary run() const {
        auto records = detail::parallel_map<TrialRecord>(
            config_.num_trials, config_.threads, [this](std::size_t i) { return run_trial(i); });
        return summarize(std::move(records));
    }

    ExperimentSummary summarize(std::vector<TrialRecord> records) const;

private:
    // n + 1 distinct pool rows; the last one is the test point.
    std::vector<std::size_t> sample_rows(Rng& rng) const {
        const std::size_t pool_size = pool_->size();
        std::vector<std::size_t> idx(pool_size);
        for (std::size_t i = 0; i < pool_size; ++i) idx[i] = i;
        for (std::size_t i = 0; i <= config_.n; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool_size - 1);
            std::swap(idx[i], idx[pick(rng)]);
        }
        idx.resize(config_.n + 1);
        return idx;
    }

    TrialConfig config_;
    std::optional<CalibrationSet> pool_;
    std::optional<EmbeddingMatrix> pool_embeddings_;
};

/// Mean of 1{miss} / alpha_tilde over trials.
inline double posthoc_validity_check(std::span<const TrialRecord> records) {
    if (records.empty()) {
        throw Error(ErrorCode::invalid_argument, "post-hoc validity check needs trials");
    }
    double sum = 0.0;
    for (const auto& r : records) sum += r.miss_over_alpha;
    return sum / static_cast<double>(records.size());
}

inline ExperimentSummary Experiment::summarize(std::vector<TrialRecord> records) const {
    ExperimentSummary s;
    s.config = config_;
    s.num_trials = records.size();
    const double count = static_cast<double>(records.size());

    double alpha_sum = 0.0, loo_sum = 0.0, covered = 0.0, set_sum = 0.0;
    for (const auto& r : records) {
        alpha_sum += r.alpha_tilde;
        loo_sum += r.alpha_loo;
        covered += r.covered ? 1.0 : 0.0;
        set_sum += static_cast<double>(r.set_size);
        if (r.degenerate) ++s.degenerate_trials;
        if (!r.degenerate && r.set_size > r.cap) ++s.cap_violations;
        if (r.bisect_alpha) {
            s.max_bisect_error = std::max(s.max_bisect_error, std::abs(*r.bisect_alpha - r.alpha_tilde));
        }
        ++s.histogram.one_minus_alpha[detail::histogram_bin(1.0 - r.alpha_tilde)];
        ++s.histogram.one_minus_loo[detail::histogram_bin(1.0 - r.alpha_loo)];
    }
    s.mean_alpha_tilde = alpha_sum / count;
    s.mean_alpha_loo = loo_sum / count;
    s.empirical_coverage = covered / count;
    s.mean_set_size = set_sum / count;
    s.posthoc_ratio_mean = posthoc_validity_check(records);

    if (config_.bound) {
        BoundParams params = *config_.bound;
        s.r_delta = r_delta(params);
        if (params.mu) s.bound_with_mu = explicit_bound_with_mu(params);
        if (config_.tau) {
            double trusted = 0.0;
            for (const auto& r : records) {
                if (trust_decision(r.alpha_loo, *s.r_delta, *config_.tau).decision ==
                    TrustDecision::trust) {
                    trusted += 1.0;
                }
            }
            s.trust_rate = trusted / count;
        }
    }
    s.records = std::move(records);
    return s;
}

inline TrialRecord run_trial(const TrialConfig& config, std::size_t trial_index) {
    return Experiment(config).run_trial(trial_index);
}

inline ExperimentSummary run_experiment(const TrialConfig& config) {
    return Experiment(config).run();
}

// ---------------------------------------------------------------------------
// Diagnostics of the theoretical guarantees
// ---------------------------------------------------------------------------

/// Long-run estimates of E[alpha_tilde] and E[E^test] (per label) at a fixed
/// calibration size, for the synthetic generator.
struct StabilityReference {
    double mean_alpha = 0.0;
    std::vector<double> mean_test_ratios;
};

struct SyntheticSetting {
    std::size_t n = 100;
    std::size_t num_labels = 10;
    double signal = 2.0;
    RuleSpec rule = ConstantRule{1};
};

inline StabilityReference reference_estimates(const SyntheticSetting& setting, std::size_t draws,
                                              std::uint64_t seed, std::size_t threads = 0) {
    if (draws < 1) throw Error(ErrorCode::invalid_argument, "reference needs draws >= 1");
    struct Sample {
        double alpha = 0.0;
        std::vector<double> ratios;
    };
    auto samples = detail::parallel_map<Sample>(draws, threads, [&](std::size_t m) {
        Rng rng = trial_stream(seed, m);
        auto draw = gen_synthetic_scores(setting.n, setting.num_labels, setting.signal, rng);
        const SizeRule rule = fit_rule(setting.rule, draw.cal, &draw.embeddings);
        const std::size_t cap =
            apply_rule(rule, draw.cal, std::span<const double>(draw.test_embedding));
        auto e = test_ratio_vector(draw.cal, draw.test_scores);
        const double alpha = adaptive_alpha(e, cap).alpha;
        return Sample{alpha, std::move(e.ratios)};
    });
    StabilityReference ref;
    ref.mean_test_ratios.assign(setting.num_labels, 0.0);
    for (const auto& s : samples) {
        ref.mean_alpha += s.alpha;
        for (std::size_t y = 0; y < s.ratios.size(); ++y) ref.mean_test_ratios[y] += s.ratios[y];
    }
    ref.mean_alpha /= static_cast<double>(draws);
    for (double& v : ref.mean_test_ratios) v /= static_cast<double>(draws);
    return ref;
}

struct StabilityResult {
    double value = 0.0;  // +inf when the denominator vanishes
    double numerator = 0.0;
    double denominator = 0.0;
    bool degenerate = false;
    std::string note;
};

inline constexpr double stability_floor = 1e-12;

/// |sum_j (alpha_j - E[alpha])| / max_y |sum_j (E^j_y - E[E^test_y])|: how much
/// the averaged pseudo-miscoverage moves per unit movement of the averaged
/// pseudo-ratios.
inline StabilityResult stability_diagnostic(const CalibrationSet& cal, const SizeRule& rule,
                                            const EmbeddingMatrix* embeddings,
                                            const StabilityReference* reference) {
    if (reference == nullptr) {
        throw Error(ErrorCode::invalid_argument, "stability diagnostic needs reference estimates");
    }
    if (reference->mean_test_ratios.size() != cal.num_labels()) {
        throw Error(ErrorCode::shape_mismatch, "reference ratios do not match K");
    }
    const auto loo = loo_estimator(cal, rule, embeddings);
    double num = 0.0;
    for (double a : loo.per_j) num += a - reference->mean_alpha;

    std::vector<double> drift(cal.num_labels(), 0.0);
    const double total = cal.observed_total();
    for (std::size_t j = 0; j < cal.size(); ++j) {
        const auto e = loo_ratio_vector(cal, j, total);
        for (std::size_t y = 0; y < drift.size(); ++y) drift[y] += e[y] - reference->mean_test_ratios[y];
    }
    double den = 0.0;
    for (double d : drift) den = std::max(den, std::abs(d));

    StabilityResult out;
    out.numerator = std::abs(num);
    out.denominator = den;
    if (den < stability_floor) {
        out.value = std::numeric_limits<double>::infinity();
        out.degenerate = true;
        out.note = "pseudo-ratios match the reference exactly; ratio undefined";
    } else {
        out.value = out.numerator / den;
    }
    return out;
}

/// Leave-one-out estimate on a fresh synthetic calibration set of size n.
inline double loo_replicate(const SyntheticSetting& setting, std::uint64_t seed, std::size_t index) {
    Rng rng = trial_stream(seed, index);
    auto draw = gen_synthetic_scores(setting.n, setting.num_labels, setting.signal, rng);
    const SizeRule rule = fit_rule(setting.rule, draw.cal, &draw.embeddings);
    return loo_estimator(draw.cal, rule, &draw.embeddings).alpha_loo;
}

/// Coverage of the fixed-level sets {y : E_y < 1/alpha}.
inline double markov_coverage(const SyntheticSetting& setting, double alpha, std::size_t trials,
                              std::uint64_t seed, std::size_t threads = 0) {
    auto hits = detail::parallel_map<char>(trials, threads, [&](std::size_t t) -> char {
        Rng rng = trial_stream(seed, t);
        auto draw = gen_synthetic_scores(setting.n, setting.num_labels, setting.signal, rng);
        const auto set = conformal_set(test_ratio_vector(draw.cal, draw.test_scores), alpha);
        return detail::contains(set, draw.test_label) ? 1 : 0;
    });
    double covered = 0.0;
    for (char h : hits) covered += h;
    return covered / static_cast<double>(trials);
}

/// Sample mean of E^test at the true label over independent draws.
inline double test_ratio_mean(const SyntheticSetting& setting, std::size_t draws,
                              std::uint64_t seed, std::size_t threads = 0) {
    auto values = detail::parallel_map<double>(draws, threads, [&](std::size_t m) {
        Rng rng = trial_stream(seed, m);
        auto draw = gen_synthetic_scores(setting.n, setting.num_labels, setting.signal, rng);
        return test_ratio_vector(draw.cal, draw.test_scores)[draw.test_label];
    });
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(draws);
}

}  // namespace bcp

#endif
