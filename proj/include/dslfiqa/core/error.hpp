#pragma once

#include <stdexcept>
#include <string>

namespace dslfiqa {

enum class ErrorCode {
  UnknownFamily,
  ParamOutOfRange,
  ShapeMismatch,
  DimensionMismatch,
  EmptyGallery,
  EmptyNegatives,
  TooFewSamples,
  DegenerateBatch,
  IdOutOfRange,
  RectOutOfBounds,
  InsufficientImages,
  InsufficientHighQuality,
  NoAnnotations,
  LengthMismatch,
  InvalidCategory,
  ZeroVariance,
  NonFiniteLoss,
  NonPositiveEpsilon,
  ImageTooSmall,
  IOFailure,
  BadCheckpoint,
  BadConfig,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace dslfiqa
