#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fockdist {

enum class ErrorKind {
    InvalidSpec,
    NumericRange,
    Unsupported,
    ContractViolation,
    DegenerateState,
    ImpossibleOutcome,
    NoSolution,
    InvalidPlan,
    ResourceLimit,
    InvalidConfig,
    StepSize,
    Truncation,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::NumericRange: return "numeric-range";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::ContractViolation: return "contract-violation";
    case ErrorKind::DegenerateState: return "degenerate-state";
    case ErrorKind::ImpossibleOutcome: return "impossible-outcome";
    case ErrorKind::NoSolution: return "no-solution";
    case ErrorKind::InvalidPlan: return "invalid-plan";
    case ErrorKind::ResourceLimit: return "resource-limit";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::StepSize: return "step-size";
    case ErrorKind::Truncation: return "truncation";
    }
    return "unknown";
}

/// Every failure raised by the library carries a kind so front-ends can map
/// it to a stable machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace fockdist
