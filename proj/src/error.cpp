#include "stochcrf/error.hpp"

namespace stochcrf {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidWindow: return "invalid-window";
    case ErrorKind::IncompatibleStats: return "incompatible-stats";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Calibration: return "calibration";
    case ErrorKind::MissingSeeds: return "missing-seeds";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::Construction: return "construction";
    case ErrorKind::Refusal: return "refusal";
    case ErrorKind::Io: return "io";
    case ErrorKind::Config: return "config";
    }
    return "unknown";
}

} // namespace stochcrf
