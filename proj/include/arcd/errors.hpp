#ifndef ARCD_ERRORS_HPP
#define ARCD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace arcd {

/** Machine-readable failure categories raised across the library. */
enum class ErrorCode {
    ParseError,            ///< malformed expression or structure file
    DivisionByZero,        ///< expression evaluation hit an exact zero denominator
    DomainError,           ///< log/sqrt evaluated outside its domain
    OriginNotSingular,     ///< frame determinant does not vanish at the origin
    H1Violation,           ///< frame degenerates on the surface away from the origin
    MeasureNotPositive,    ///< reference measure density is not strictly positive
    StronglyRegularMismatch, ///< declared power-law regularity class does not hold
    StepUndetected,        ///< no finite vanishing order up to the probe limit
    CharacteristicPoint,   ///< surface covector undefined (normalization vanishes)
    LeftChart,             ///< integration escaped the coordinate chart
    StiffnessFailure,      ///< step size underflow or step budget exhausted
    FitConditioning,       ///< Taylor-fit least-squares system too ill-conditioned
    SingularB0,            ///< frame matrix at s=0 not invertible
    WrongRegularityClass,  ///< operation requires a different regularity class
    InsufficientTail,      ///< too few positive samples to fit the singularity
    SampleFailure,         ///< too many curve samples failed to evaluate
    BadInput,              ///< caller violated a documented precondition
    IoError,               ///< file could not be read or written
};

/** Returns the identifier name of an error code (e.g. "DivisionByZero"). */
inline const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::OriginNotSingular: return "OriginNotSingular";
    case ErrorCode::H1Violation: return "H1Violation";
    case ErrorCode::MeasureNotPositive: return "MeasureNotPositive";
    case ErrorCode::StronglyRegularMismatch: return "StronglyRegularMismatch";
    case ErrorCode::StepUndetected: return "StepUndetected";
    case ErrorCode::CharacteristicPoint: return "CharacteristicPoint";
    case ErrorCode::LeftChart: return "LeftChart";
    case ErrorCode::StiffnessFailure: return "StiffnessFailure";
    case ErrorCode::FitConditioning: return "FitConditioning";
    case ErrorCode::SingularB0: return "SingularB0";
    case ErrorCode::WrongRegularityClass: return "WrongRegularityClass";
    case ErrorCode::InsufficientTail: return "InsufficientTail";
    case ErrorCode::SampleFailure: return "SampleFailure";
    case ErrorCode::BadInput: return "BadInput";
    case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

/** Exception type carrying an ErrorCode alongside the human-readable message. */
class ArError : public std::runtime_error {
public:
    ArError(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace arcd

#endif
