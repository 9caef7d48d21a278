#include "etcsim/errors.hpp"

namespace etcsim {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::UndefinedBearing: return "undefined bearing";
    case ErrorKind::PoleDegeneracy: return "pole degeneracy";
    case ErrorKind::UndefinedCorrelation: return "undefined correlation";
    case ErrorKind::SingularBandwidth: return "singular bandwidth";
    case ErrorKind::UnsupportedConditioning: return "unsupported conditioning";
    case ErrorKind::InsufficientTail: return "insufficient tail data";
    case ErrorKind::Fit: return "fit error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::InvalidInverse: return "invalid inverse";
    case ErrorKind::Separation: return "separation";
    case ErrorKind::UndefinedRegion: return "undefined region";
    case ErrorKind::Schema: return "schema mismatch";
    case ErrorKind::Io: return "i/o error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

bool is_validation_kind(ErrorKind kind) noexcept {
  return kind == ErrorKind::Parse || kind == ErrorKind::Validation ||
         kind == ErrorKind::Argument || kind == ErrorKind::Io;
}

}  // namespace etcsim
