#include "corrface/error.hpp"

namespace corrface {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::NegativeAlpha: return "NegativeAlpha";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::RetainedTooLarge: return "RetainedTooLarge";
    case Errc::DegenerateLandmarks: return "DegenerateLandmarks";
    case Errc::OutOfBoundsLandmark: return "OutOfBoundsLandmark";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::UnknownLandmark: return "UnknownLandmark";
    case Errc::EmptyScores: return "EmptyScores";
    case Errc::EmptyGallery: return "EmptyGallery";
    case Errc::RegionMismatch: return "RegionMismatch";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::InsufficientSubjects: return "InsufficientSubjects";
    case Errc::Io: return "Io";
    case Errc::Format: return "Format";
    case Errc::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace corrface
