#ifndef BCP_REPORT_HPP
#define BCP_REPORT_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "bcp/bounds.hpp"
#include "bcp/csv.hpp"
#include "bcp/error.hpp"
#include "bcp/harness.hpp"
#include "bcp/loo.hpp"
#include "bcp/rules.hpp"

namespace bcp {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// JSON text with 17-significant-digit floats
// ---------------------------------------------------------------------------

namespace detail {

inline void dump17_into(std::ostream& out, const Json& j, int indent, int depth) {
    const auto pad = [&](int d) {
        if (indent >= 0) out << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
    };
    const char* sep = indent >= 0 ? ": " : ":";
    switch (j.type()) {
        case Json::value_t::number_float: {
            const double v = j.get<double>();
            if (std::isfinite(v)) {
                out << format_double(v);
            } else {
                out << "null";
            }
            break;
        }
        case Json::value_t::object: {
            if (j.empty()) {
                out << "{}";
                break;
            }
            out << '{';
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out << ',';
                first = false;
                pad(depth + 1);
                out << Json(it.key()).dump() << sep;
                dump17_into(out, it.value(), indent, depth + 1);
            }
            pad(depth);
            out << '}';
            break;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out << "[]";
                break;
            }
            out << '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out << ',';
                first = false;
                pad(depth + 1);
                dump17_into(out, v, indent, depth + 1);
            }
            pad(depth);
            out << ']';
            break;
        }
        default:
            out << j.dump();
    }
}

}  // namespace detail

/// Like Json::dump, but every float is written with 17 significant digits.
inline std::string dump17(const Json& j, int indent = -1) {
    std::ostringstream out;
    detail::dump17_into(out, j, indent, 0);
    return out.str();
}

// ---------------------------------------------------------------------------
// Rules
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
T required(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) {
        throw Error(ErrorCode::invalid_argument, where + " is missing '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::invalid_argument, where + " has an invalid '" + key + "'");
    }
}

template <class T>
T optional_or(const Json& j, const char* key, T fallback, const std::string& where) {
    return j.contains(key) ? required<T>(j, key, where) : fallback;
}

}  // namespace detail

/// Accepts `{"kind": "constant", "t": 1}`, the entropy form, or either one
/// wrapped as `{"rule": {...}}`.
inline RuleSpec parse_rule(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "rule must be a JSON object");
    if (j.contains("rule")) return parse_rule(j.at("rule"));
    const auto kind = detail::required<std::string>(j, "kind", "rule");
    if (kind == "constant") {
        const auto t = detail::required<long long>(j, "t", "constant rule");
        if (t < 1) throw Error(ErrorCode::invalid_argument, "constant rule needs t >= 1");
        return ConstantRule{static_cast<std::size_t>(t)};
    }
    if (kind == "entropy") {
        EntropyRuleSpec spec;
        const auto read_count = [&](const char* key, std::size_t fallback) {
            const auto v = detail::optional_or<long long>(j, key, static_cast<long long>(fallback),
                                                          "entropy rule");
            if (v < 1) {
                throw Error(ErrorCode::invalid_argument,
                            std::string("entropy rule needs ") + key + " >= 1");
            }
            return static_cast<std::size_t>(v);
        };
        spec.k = read_count("k", spec.k);
        spec.t_min = read_count("t_min", spec.t_min);
        spec.t_max = read_count("t_max", spec.t_max);
        spec.skew_exponent =
            detail::optional_or<double>(j, "skew_exponent", spec.skew_exponent, "entropy rule");
        return spec;
    }
    throw Error(ErrorCode::invalid_argument, "unknown rule kind '" + kind + "'");
}

/// Inline JSON text, or a path to a file holding it.
inline RuleSpec parse_rule_text(const std::string& text) {
    std::string body = text;
    std::error_code ec;
    if (!text.empty() && text.front() != '{' && std::filesystem::is_regular_file(text, ec)) {
        std::ifstream in(text);
        std::ostringstream buf;
        buf << in.rdbuf();
        body = buf.str();
    }
    try {
        return parse_rule(Json::parse(body));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::invalid_argument, std::string("rule is not valid JSON: ") + e.what());
    }
}

inline Json to_json(const RuleSpec& spec) {
    if (const auto* c = std::get_if<ConstantRule>(&spec)) {
        return Json{{"kind", "constant"}, {"t", c->t}};
    }
    const auto& e = std::get<EntropyRuleSpec>(spec);
    return Json{{"kind", "entropy"},
                {"k", e.k},
                {"t_min", e.t_min},
                {"t_max", e.t_max},
                {"skew_exponent", e.skew_exponent}};
}

// ---------------------------------------------------------------------------
// Trial configuration
// ---------------------------------------------------------------------------

inline BoundParams parse_bound(const Json& j) {
    BoundParams p;
    const auto n = detail::required<long long>(j, "n", "bound");
    if (n < 1) throw Error(ErrorCode::invalid_argument, "bound needs n >= 1");
    p.n = static_cast<std::size_t>(n);
    p.s_min = detail::required<double>(j, "s_min", "bound");
    p.s_max = detail::required<double>(j, "s_max", "bound");
    p.delta = detail::required<double>(j, "delta", "bound");
    if (j.contains("mu")) p.mu = detail::required<double>(j, "mu", "bound");
    validate(p);
    return p;
}

inline Json to_json(const BoundParams& p) {
    Json j{{"n", p.n}, {"s_min", p.s_min}, {"s_max", p.s_max}, {"delta", p.delta}};
    if (p.mu) j["mu"] = *p.mu;
    return j;
}

/// Relative csv paths are resolved against `base_dir`.
inline TrialConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {}) {
    if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "config must be a JSON object");
    TrialConfig c;
    const auto count = [&](const char* key, std::size_t fallback) {
        const auto v =
            detail::optional_or<long long>(j, key, static_cast<long long>(fallback), "config");
        if (v < 0) throw Error(ErrorCode::invalid_argument, std::string("config '") + key + "' < 0");
        return static_cast<std::size_t>(v);
    };
    c.n = count("n", c.n);
    c.num_labels = count("K", c.num_labels);
    c.num_trials = count("num_trials", c.num_trials);
    c.threads = count("threads", c.threads);
    c.master_seed = detail::optional_or<std::uint64_t>(j, "master_seed", c.master_seed, "config");
    c.bisect_check = detail::optional_or<bool>(j, "bisect_check", c.bisect_check, "config");
    c.bisect_tol = detail::optional_or<double>(j, "bisect_tol", c.bisect_tol, "config");
    if (j.contains("rule")) c.rule = parse_rule(j.at("rule"));
    if (j.contains("generator")) {
        const auto& g = j.at("generator");
        const auto kind = detail::required<std::string>(g, "kind", "generator");
        if (kind == "softmax-logit") {
            c.source = SyntheticSource{detail::optional_or<double>(g, "signal", 0.0, "generator")};
        } else if (kind == "csv") {
            CsvSource src;
            const auto resolve = [&](const std::string& p) {
                std::filesystem::path path(p);
                return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
            };
            src.score_path = resolve(detail::required<std::string>(g, "score_path", "generator"));
            if (g.contains("embedding_path")) {
                src.embedding_path =
                    resolve(detail::required<std::string>(g, "embedding_path", "generator"));
            }
            c.source = std::move(src);
        } else {
            throw Error(ErrorCode::invalid_argument, "unknown generator kind '" + kind + "'");
        }
    }
    if (j.contains("bound")) c.bound = parse_bound(j.at("bound"));
    if (j.contains("tau")) c.tau = detail::required<double>(j, "tau", "config");
    return c;
}

inline TrialConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::missing_file, "cannot open '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::invalid_argument,
                    "config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(j, path.parent_path());
}

/// Echo of everything that determines the results (thread count excluded).
inline Json to_json(const TrialConfig& c) {
    Json j{{"n", c.n},
           {"K", c.num_labels},
           {"rule", to_json(c.rule)},
           {"num_trials", c.num_trials},
           {"master_seed", c.master_seed},
           {"bisect_check", c.bisect_check},
           {"bisect_tol", c.bisect_tol}};
    if (const auto* syn = std::get_if<SyntheticSource>(&c.source)) {
        j["generator"] = Json{{"kind", "softmax-logit"}, {"signal", syn->signal}};
    } else {
        const auto& csv = std::get<CsvSource>(c.source);
        Json g{{"kind", "csv"}, {"score_path", csv.score_path.generic_string()}};
        if (csv.embedding_path) g["embedding_path"] = csv.embedding_path->generic_string();
        j["generator"] = g;
    }
    if (c.bound) j["bound"] = to_json(*c.bound);
    if (c.tau) j["tau"] = *c.tau;
    return j;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

inline Json to_json(const TrialRecord& r) {
    Json j{{"trial", r.trial},
           {"alpha_tilde", r.alpha_tilde},
           {"covered", r.covered},
           {"set_size", r.set_size},
           {"cap", r.cap},
           {"degenerate", r.degenerate},
           {"alpha_loo", r.alpha_loo},
           {"miss_over_alpha", r.miss_over_alpha}};
    if (r.bisect_alpha) j["bisect_alpha"] = *r.bisect_alpha;
    if (r.test_row) j["test_row"] = *r.test_row;
    return j;
}

inline Json to_json(const ExperimentSummary& s) {
    Json hist = Json::array();
    for (std::size_t b = 0; b < histogram_bins; ++b) {
        hist.push_back(Json{{"bin_left", static_cast<double>(b) / histogram_bins},
                            {"bin_right", static_cast<double>(b + 1) / histogram_bins},
                            {"count_one_minus_alpha", s.histogram.one_minus_alpha[b]},
                            {"count_one_minus_loo", s.histogram.one_minus_loo[b]}});
    }
    Json records = Json::array();
    for (const auto& r : s.records) records.push_back(to_json(r));
    Json j{{"config", to_json(s.config)},
           {"seed", s.config.master_seed},
           {"num_trials", s.num_trials},
           {"mean_alpha_tilde", s.mean_alpha_tilde},
           {"mean_alpha_loo", s.mean_alpha_loo},
           {"empirical_coverage", s.empirical_coverage},
           {"posthoc_ratio_mean", s.posthoc_ratio_mean},
           {"mean_set_size", s.mean_set_size},
           {"degenerate_trials", s.degenerate_trials},
           {"cap_violations", s.cap_violations},
           {"histogram", hist},
           {"records", records}};
    if (s.config.bisect_check) j["max_bisect_error"] = s.max_bisect_error;
    if (s.r_delta) {
        Json b{{"r_delta", *s.r_delta}, {"caveat", bound_caveat}};
        if (s.bound_with_mu) b["bound_with_mu"] = *s.bound_with_mu;
        if (s.trust_rate) b["trust_rate"] = *s.trust_rate;
        j["bound"] = b;
    }
    return j;
}

inline Json to_json(const MiscoverageResult& m) {
    return Json{{"alpha", m.alpha},
                {"set", m.set_indices},
                {"degenerate", m.degenerate},
                {"cap", m.cap}};
}

inline Json to_json(const LooEstimate& e) {
    return Json{{"alpha_loo", e.alpha_loo}, {"per_j", e.per_j}, {"per_j_caps", e.per_j_caps}};
}

inline Json to_json(const TrustReport& t) {
    return Json{{"alpha_loo", t.alpha_loo},
                {"r_delta", t.r_delta},
                {"tau", t.tau},
                {"lower_coverage", t.lower_coverage},
                {"decision", to_string(t.decision)}};
}

inline void write_histogram_csv(std::ostream& out, const ExperimentSummary& s) {
    out << "bin_left,bin_right,count_one_minus_alpha,count_one_minus_loo\n";
    for (std::size_t b = 0; b < histogram_bins; ++b) {
        out << format_double(static_cast<double>(b) / histogram_bins) << ','
            << format_double(static_cast<double>(b + 1) / histogram_bins) << ','
            << s.histogram.one_minus_alpha[b] << ',' << s.histogram.one_minus_loo[b] << '\n';
    }
}

inline void write_trials_csv(std::ostream& out, const ExperimentSummary& s) {
    out << "trial,alpha_tilde,covered,set_size,cap,degenerate,alpha_loo,miss_over_alpha\n";
    for (const auto& r : s.records) {
        out << r.trial << ',' << format_double(r.alpha_tilde) << ',' << (r.covered ? 1 : 0) << ','
            << r.set_size << ',' << r.cap << ',' << (r.degenerate ? 1 : 0) << ','
            << format_double(r.alpha_loo) << ',' << format_double(r.miss_over_alpha) << '\n';
    }
}

/// Writes summary.json, histogram.csv and trials.csv into `dir`.
inline void write_outputs(const ExperimentSummary& s, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir / "summary.json",
               [](std::ostream& out, const ExperimentSummary& v) { out << dump17(to_json(v), 2) << '\n'; },
               s);
    write_file(dir / "histogram.csv",
               [](std::ostream& out, const ExperimentSummary& v) { write_histogram_csv(out, v); }, s);
    write_file(dir / "trials.csv",
               [](std::ostream& out, const ExperimentSummary& v) { write_trials_csv(out, v); }, s);
}

}  // namespace bcp

#endif
