#pragma once

// Raster faces -> per-region feature vectors.

#include "corrface/features.hpp"
#include "corrface/pose_data.hpp"

#include <vector>

namespace corrface {

// "holistic" followed by the five landmark names.
std::vector<std::string> default_region_names();

// Normalizes the face and extracts the holistic vector plus one local Gabor
// vector per landmark. A clamped landmark window marks its region invalid.
Observation extract_observation(const FaceSample& sample, const GaborBank& bank);

// image_index counts repeats of (subject, pose) in input order. When `labels`
// is given, errors are prefixed with the label of the failing sample.
PoseDataset extract_dataset(const std::vector<FaceSample>& samples, const GaborBank& bank,
                            int jobs = 1, const std::vector<std::string>* labels = nullptr);

}  // namespace corrface
