#include "sparsedom/error.hpp"

namespace sparsedom {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DepthExhausted: return "depth-exhausted";
        case ErrorCode::MissingWitness: return "missing-witness";
        case ErrorCode::EmptyRegion: return "empty-region";
        case ErrorCode::NotElliptic: return "not-elliptic";
        case ErrorCode::RadiusTooSmall: return "radius-too-small";
        case ErrorCode::NotDifferentiable: return "not-differentiable";
        case ErrorCode::NoConvergence: return "no-convergence";
        case ErrorCode::NotHomogeneous: return "not-homogeneous";
        case ErrorCode::DegenerateWeight: return "degenerate-weight";
        case ErrorCode::MeasureBoundViolated: return "measure-bound-violated";
        case ErrorCode::NoWitness: return "no-witness";
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::ConfigError: return "config-error";
        case ErrorCode::IoError: return "io-error";
    }
    return "unknown";
}

}  // namespace sparsedom
