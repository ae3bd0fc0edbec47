#ifndef BCP_ERROR_HPP
#define BCP_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace bcp {

enum class ErrorCode {
    missing_file,
    malformed_row,
    negative_score,
    label_out_of_range,
    too_few_labels,
    shape_mismatch,
    invalid_argument,
    degenerate_input,
    invalid_cap,
    missing_embeddings,
    precondition,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::missing_file: return "missing-file";
        case ErrorCode::malformed_row: return "malformed-row";
        case ErrorCode::negative_score: return "negative-score";
        case ErrorCode::label_out_of_range: return "label-out-of-range";
        case ErrorCode::too_few_labels: return "too-few-labels";
        case ErrorCode::shape_mismatch: return "shape-mismatch";
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::degenerate_input: return "degenerate-input";
        case ErrorCode::invalid_cap: return "invalid-cap";
        case ErrorCode::missing_embeddings: return "missing-embeddings";
        case ErrorCode::precondition: return "precondition";
    }
    return "unknown";
}

/// Every failure raised by the library. The message is prefixed with the
/// error kind so command-line diagnostics and bindings carry the same text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace bcp

#endif
