#pragma once

#include <stdexcept>
#include <string>

namespace flowforge {

// Every recoverable failure in the library carries one of these codes so the
// CLI can map them onto its fixed exit-code table.
enum class Err {
    DimensionMismatch,
    FamilyViolation,
    NegativeDuration,
    NonFiniteInput,
    ParseError,
    Overflow,
    NotElementary,
    NotSignDiagonal,
    OddNegativeCount,
    SingularMatrix,
    NegativeDeterminant,
    AlphaOutOfRange,
    DimensionTooSmall,
    ConditionViolated,
    BudgetExceeded,
    TimeOutOfRange,
    LambdaTooSmall,
    NegativeCoefficient,
    ZeroDerivative,
    NonFiniteState,
    SingularStencil,
    UnknownDemo,
};

inline const char* err_name(Err e) {
    switch (e) {
        case Err::DimensionMismatch: return "DimensionMismatch";
        case Err::FamilyViolation: return "FamilyViolation";
        case Err::NegativeDuration: return "NegativeDuration";
        case Err::NonFiniteInput: return "NonFiniteInput";
        case Err::ParseError: return "ParseError";
        case Err::Overflow: return "Overflow";
        case Err::NotElementary: return "NotElementary";
        case Err::NotSignDiagonal: return "NotSignDiagonal";
        case Err::OddNegativeCount: return "OddNegativeCount";
        case Err::SingularMatrix: return "SingularMatrix";
        case Err::NegativeDeterminant: return "NegativeDeterminant";
        case Err::AlphaOutOfRange: return "AlphaOutOfRange";
        case Err::DimensionTooSmall: return "DimensionTooSmall";
        case Err::ConditionViolated: return "ConditionViolated";
        case Err::BudgetExceeded: return "BudgetExceeded";
        case Err::TimeOutOfRange: return "TimeOutOfRange";
        case Err::LambdaTooSmall: return "LambdaTooSmall";
        case Err::NegativeCoefficient: return "NegativeCoefficient";
        case Err::ZeroDerivative: return "ZeroDerivative";
        case Err::NonFiniteState: return "NonFiniteState";
        case Err::SingularStencil: return "SingularStencil";
        case Err::UnknownDemo: return "UnknownDemo";
    }
    return "UnknownError";
}

class FlowError : public std::runtime_error {
  public:
    FlowError(Err code, const std::string& msg)
        : std::runtime_error(std::string(err_name(code)) + ": " + msg), code_(code) {}
    Err code() const { return code_; }

  private:
    Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& msg) {
    throw FlowError(code, msg);
}

} // namespace flowforge
