#pragma once

#include <stdexcept>
#include <string>

namespace becaptcha {

// Error kinds grouped by how the CLI maps them to exit codes:
// validation -> 2, data -> 3, convergence -> 4.
enum class ErrorKind {
  // validation
  DegenerateTrace,
  ZeroScreen,
  ZeroDistance,
  NonFiniteFeature,
  EmptyTrace,
  ModeMismatch,
  NonPositiveDuration,
  PriorUnfit,
  ShapeMismatch,
  NonFiniteInput,
  StaleCache,
  UntrainedModel,
  KExceedsTrainingSize,
  ConfigContradiction,
  MalformedRequest,
  InvalidConfig,
  // data
  MissingPath,
  EmptyCorpus,
  SchemaViolation,
  EmptyTrainingSet,
  SingleClassTrainingSet,
  InsufficientData,
  InsufficientSamples,
  SingleClassEvalSet,
  VersionMismatch,
  CorruptBundle,
  // convergence
  SmoNonConvergence,
  NonFiniteLoss,
};

enum class ErrorCategory { Validation = 2, Data = 3, Convergence = 4 };

inline ErrorCategory category_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::MissingPath:
    case ErrorKind::EmptyCorpus:
    case ErrorKind::SchemaViolation:
    case ErrorKind::EmptyTrainingSet:
    case ErrorKind::SingleClassTrainingSet:
    case ErrorKind::InsufficientData:
    case ErrorKind::InsufficientSamples:
    case ErrorKind::SingleClassEvalSet:
    case ErrorKind::VersionMismatch:
    case ErrorKind::CorruptBundle:
      return ErrorCategory::Data;
    case ErrorKind::SmoNonConvergence:
    case ErrorKind::NonFiniteLoss:
      return ErrorCategory::Convergence;
    default:
      return ErrorCategory::Validation;
  }
}

inline const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::DegenerateTrace: return "DegenerateTrace";
    case ErrorKind::ZeroScreen: return "ZeroScreen";
    case ErrorKind::ZeroDistance: return "ZeroDistance";
    case ErrorKind::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorKind::EmptyTrace: return "EmptyTrace";
    case ErrorKind::ModeMismatch: return "ModeMismatch";
    case ErrorKind::NonPositiveDuration: return "NonPositiveDuration";
    case ErrorKind::PriorUnfit: return "PriorUnfit";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::StaleCache: return "StaleCache";
    case ErrorKind::UntrainedModel: return "UntrainedModel";
    case ErrorKind::KExceedsTrainingSize: return "KExceedsTrainingSize";
    case ErrorKind::ConfigContradiction: return "ConfigContradiction";
    case ErrorKind::MalformedRequest: return "MalformedRequest";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::MissingPath: return "MissingPath";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::SingleClassTrainingSet: return "SingleClassTrainingSet";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::SingleClassEvalSet: return "SingleClassEvalSet";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptBundle: return "CorruptBundle";
    case ErrorKind::SmoNonConvergence: return "SmoNonConvergence";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  ErrorCategory category() const { return category_of(kind_); }
  int exit_code() const { return static_cast<int>(category()); }

 private:
  ErrorKind kind_;
};

}  // namespace becaptcha
