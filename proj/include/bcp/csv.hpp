#ifndef BCP_CSV_HPP
#define BCP_CSV_HPP

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "bcp/error.hpp"
#include "bcp/matrix.hpp"
#include "bcp/scores.hpp"

namespace bcp {

/// 17 significant digits, locale independent. Used for every floating-point
/// value written to disk or stdout.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

inline std::string_view trim_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

inline bool parse_double(std::string_view field, double& out) {
    if (field.empty()) return false;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc{} && ptr == field.data() + field.size();
}

inline bool parse_integer(std::string_view field, long long& out) {
    if (field.empty()) return false;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc{} && ptr == field.data() + field.size();
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::missing_file, "cannot open '" + path.string() + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    while (!lines.empty() && trim_cr(lines.back()).empty()) lines.pop_back();
    return lines;
}

// Header must read `<first>p0,p1,...` with the given column prefix.
inline std::size_t check_header(std::string_view header, std::string_view first,
                                std::string_view prefix, const std::string& what) {
    const auto fields = split_fields(trim_cr(header));
    std::size_t start = 0;
    if (!first.empty()) {
        if (fields.empty() || fields[0] != first) {
            throw Error(ErrorCode::malformed_row, what + " header must start with '" +
                                                      std::string(first) + "'");
        }
        start = 1;
    }
    for (std::size_t c = start; c < fields.size(); ++c) {
        const std::string expected = std::string(prefix) + std::to_string(c - start);
        if (fields[c] != expected) {
            throw Error(ErrorCode::malformed_row, what + " header column " + std::to_string(c) +
                                                      " is '" + std::string(fields[c]) +
                                                      "', expected '" + expected + "'");
        }
    }
    return fields.size() - start;
}

}  // namespace detail

/// Reads `label,s0,...,s{K-1}`; data rows are numbered from 1 in diagnostics.
inline CalibrationSet load_scores_csv(const std::filesystem::path& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty()) {
        throw Error(ErrorCode::malformed_row, "'" + path.string() + "' has no header");
    }
    const std::size_t k = detail::check_header(lines[0], "label", "s", "score");
    if (k < 2) {
        throw Error(ErrorCode::too_few_labels,
                    "score file declares K = " + std::to_string(k) + " labels, need K >= 2");
    }

    std::vector<double> flat;
    std::vector<std::size_t> labels;
    flat.reserve((lines.size() - 1) * k);
    labels.reserve(lines.size() - 1);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const std::string row_tag = "row " + std::to_string(r);
        const auto fields = detail::split_fields(detail::trim_cr(lines[r]));
        if (fields.size() != k + 1) {
            throw Error(ErrorCode::malformed_row, row_tag + ": expected " + std::to_string(k + 1) +
                                                      " fields, got " +
                                                      std::to_string(fields.size()));
        }
        long long label = 0;
        if (!detail::parse_integer(fields[0], label)) {
            throw Error(ErrorCode::malformed_row,
                        row_tag + ": label '" + std::string(fields[0]) + "' is not an integer");
        }
        if (label < 0 || static_cast<unsigned long long>(label) >= k) {
            throw Error(ErrorCode::label_out_of_range,
                        row_tag + ": label " + std::to_string(label) + " outside [0, " +
                            std::to_string(k) + ")");
        }
        labels.push_back(static_cast<std::size_t>(label));
        for (std::size_t c = 1; c <= k; ++c) {
            double v = 0.0;
            if (!detail::parse_double(fields[c], v) || !std::isfinite(v)) {
                throw Error(ErrorCode::malformed_row, row_tag + ": score '" +
                                                          std::string(fields[c]) +
                                                          "' is not a finite number");
            }
            if (v < 0.0) {
                throw Error(ErrorCode::negative_score,
                            row_tag + ": negative score " + std::string(fields[c]));
            }
            flat.push_back(v);
        }
    }
    if (labels.empty()) {
        throw Error(ErrorCode::malformed_row, "'" + path.string() + "' has no data rows");
    }
    const std::size_t n = labels.size();
    return {ScoreMatrix(Matrix(n, k, std::move(flat))), std::move(labels)};
}

/// Reads `e0,...,e{d-1}`.
inline EmbeddingMatrix load_embeddings_csv(const std::filesystem::path& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty()) {
        throw Error(ErrorCode::malformed_row, "'" + path.string() + "' has no header");
    }
    const std::size_t d = detail::check_header(lines[0], "", "e", "embedding");
    std::vector<double> flat;
    flat.reserve((lines.size() - 1) * d);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = detail::split_fields(detail::trim_cr(lines[r]));
        if (fields.size() != d) {
            throw Error(ErrorCode::malformed_row, "row " + std::to_string(r) + ": expected " +
                                                      std::to_string(d) + " fields, got " +
                                                      std::to_string(fields.size()));
        }
        for (auto f : fields) {
            double v = 0.0;
            if (!detail::parse_double(f, v) || !std::isfinite(v)) {
                throw Error(ErrorCode::malformed_row, "row " + std::to_string(r) + ": value '" +
                                                          std::string(f) +
                                                          "' is not a finite number");
            }
            flat.push_back(v);
        }
    }
    const std::size_t n = lines.size() - 1;
    return EmbeddingMatrix(Matrix(n, d, std::move(flat)));
}

inline void write_scores_csv(std::ostream& out, const CalibrationSet& cal) {
    out << "label";
    for (std::size_t y = 0; y < cal.num_labels(); ++y) out << ",s" << y;
    out << '\n';
    for (std::size_t i = 0; i < cal.size(); ++i) {
        out << cal.labels()[i];
        for (double s : cal.scores().row(i)) out << ',' << format_double(s);
        out << '\n';
    }
}

inline void write_embeddings_csv(std::ostream& out, const EmbeddingMatrix& emb) {
    for (std::size_t c = 0; c < emb.dim(); ++c) out << (c ? ",e" : "e") << c;
    out << '\n';
    for (std::size_t i = 0; i < emb.rows(); ++i) {
        auto r = emb.row(i);
        for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << format_double(r[c]);
        out << '\n';
    }
}

template <class Writer, class T>
void write_file(const std::filesystem::path& path, Writer&& writer, const T& value) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::missing_file, "cannot write '" + path.string() + "'");
    writer(out, value);
}

}  // namespace bcp

#endif
