#include "costsens/error.hpp"

namespace costsens {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InputNotFound: return "input-not-found";
    case ErrorCode::Io: return "io-error";
    case ErrorCode::Schema: return "schema-error";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::EmptyDataset: return "empty-dataset";
    case ErrorCode::NoPositiveCost: return "no-positive-cost";
    case ErrorCode::SingularDesign: return "singular-design";
    case ErrorCode::EmptyFit: return "empty-fit";
    case ErrorCode::ZeroProbability: return "zero-probability";
    case ErrorCode::MgfDomain: return "mgf-domain";
    case ErrorCode::Separation: return "separation";
    case ErrorCode::CorrelationModel: return "correlation-model";
    case ErrorCode::Config: return "config-error";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::NotConverged: return "not-converged";
  }
  return "unknown";
}

}  // namespace costsens
