#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seqread {

enum class ErrorCode {
    InvalidDimension,
    TruncationOverflow,
    InvalidEfficiency,
    InvalidTime,
    InvalidArgument,
    NumericDivergence,
    SampleRateMismatch,
    LengthMismatch,
    DegenerateNormalization,
    CoverageDeficit,
    BinningMismatch,
    EmptySamples,
    NoHeraldedPairs,
    NonConvergence,
    RankDeficient,
    InvalidProtocol,
    DegenerateGeometry,
    ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

    /// Numeric failures map to exit code 3; configuration problems to 2.
    bool is_numeric() const noexcept;

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace seqread
