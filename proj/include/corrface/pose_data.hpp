#pragma once

#include "corrface/subspace.hpp"

#include <string>
#include <vector>

namespace corrface {

// One image's per-region feature vectors.
struct Observation {
  std::string subject_id;
  double pose_deg = 0.0;
  int image_index = 0;
  std::vector<Vector> regions;  // aligned with PoseDataset::region_names
  std::vector<bool> valid;      // false when a region could not be measured
};

// Features of many subjects seen under several poses.
struct PoseDataset {
  std::vector<std::string> region_names;
  std::vector<Observation> observations;

  // Distinct poses, ascending.
  std::vector<double> poses() const;
  // Distinct subjects, first-seen order.
  std::vector<std::string> subjects() const;
  std::size_t region_index(const std::string& name) const;  // throws RegionMismatch
  Index region_dim(std::size_t region) const;

  // Throws InvalidArgument on ragged region lists or inconsistent dimensions.
  void validate() const;
};

}  // namespace corrface
