#pragma once

#include <stdexcept>
#include <string>

namespace mibci {

// Failure categories used across the library. The CLI maps these onto its
// exit-code contract (validation, divergence, incompatibility).
enum class ErrorCode {
    MalformedHeader,
    SampleSizeMismatch,
    NonFiniteSample,
    WindowOutOfRange,
    InvalidSpec,
    DegenerateSplit,
    InvalidBand,
    UnsupportedOrder,
    SignalTooShort,
    SegmentTooLong,
    EmptyBand,
    SingularCovariance,
    LengthMismatch,
    IndexOutOfRange,
    MissingChannel,
    SingleClass,
    ShapeMismatch,
    TooFewRows,
    NonFiniteLoss,
    EmptySection,
    UnknownSubjectLabel,
    ModelMismatch,
    ConfigError,
    IoError,
    InvalidArgument,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::SampleSizeMismatch: return "SampleSizeMismatch";
        case ErrorCode::NonFiniteSample: return "NonFiniteSample";
        case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::DegenerateSplit: return "DegenerateSplit";
        case ErrorCode::InvalidBand: return "InvalidBand";
        case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
        case ErrorCode::SignalTooShort: return "SignalTooShort";
        case ErrorCode::SegmentTooLong: return "SegmentTooLong";
        case ErrorCode::EmptyBand: return "EmptyBand";
        case ErrorCode::SingularCovariance: return "SingularCovariance";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::MissingChannel: return "MissingChannel";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::TooFewRows: return "TooFewRows";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::EmptySection: return "EmptySection";
        case ErrorCode::UnknownSubjectLabel: return "UnknownSubjectLabel";
        case ErrorCode::ModelMismatch: return "ModelMismatch";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace mibci
