#include "seqread/errors.hpp"

namespace seqread {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidDimension: return "invalid-dimension";
        case ErrorCode::TruncationOverflow: return "truncation-overflow";
        case ErrorCode::InvalidEfficiency: return "invalid-efficiency";
        case ErrorCode::InvalidTime: return "invalid-time";
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::NumericDivergence: return "numeric-divergence";
        case ErrorCode::SampleRateMismatch: return "sample-rate-mismatch";
        case ErrorCode::LengthMismatch: return "length-mismatch";
        case ErrorCode::DegenerateNormalization: return "degenerate-normalization";
        case ErrorCode::CoverageDeficit: return "coverage-deficit";
        case ErrorCode::BinningMismatch: return "binning-mismatch";
        case ErrorCode::EmptySamples: return "empty-samples";
        case ErrorCode::NoHeraldedPairs: return "no-heralded-pairs";
        case ErrorCode::NonConvergence: return "non-convergence";
        case ErrorCode::RankDeficient: return "rank-deficient";
        case ErrorCode::InvalidProtocol: return "invalid-protocol";
        case ErrorCode::DegenerateGeometry: return "degenerate-geometry";
        case ErrorCode::ConfigError: return "config-error";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

bool Error::is_numeric() const noexcept {
    return code_ != ErrorCode::ConfigError;
}

void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace seqread
