#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace corrface {

enum class Errc {
  EmptyDataset,
  NonFiniteInput,
  NegativeAlpha,
  SingularCovariance,
  InvalidArgument,
  DimensionMismatch,
  RetainedTooLarge,
  DegenerateLandmarks,
  OutOfBoundsLandmark,
  InvalidParams,
  UnknownLandmark,
  EmptyScores,
  EmptyGallery,
  RegionMismatch,
  InvalidSpec,
  InsufficientSubjects,
  Io,
  Format,
  Config,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace corrface
