#include "corrface/pose_data.hpp"

#include "corrface/error.hpp"

#include <algorithm>

namespace corrface {

std::vector<double> PoseDataset::poses() const {
  std::vector<double> out;
  for (const auto& o : observations) out.push_back(o.pose_deg);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> PoseDataset::subjects() const {
  std::vector<std::string> out;
  for (const auto& o : observations) {
    if (std::find(out.begin(), out.end(), o.subject_id) == out.end()) {
      out.push_back(o.subject_id);
    }
  }
  return out;
}

std::size_t PoseDataset::region_index(const std::string& name) const {
  const auto it = std::find(region_names.begin(), region_names.end(), name);
  if (it == region_names.end()) {
    throw Error(Errc::RegionMismatch, "dataset has no region '" + name + "'");
  }
  return static_cast<std::size_t>(it - region_names.begin());
}

Index PoseDataset::region_dim(std::size_t region) const {
  for (const auto& o : observations) {
    if (o.valid[region]) return o.regions[region].size();
  }
  return observations.empty() ? 0 : observations.front().regions[region].size();
}

void PoseDataset::validate() const {
  for (const auto& o : observations) {
    if (o.regions.size() != region_names.size() || o.valid.size() != region_names.size()) {
      throw Error(Errc::InvalidArgument,
                  "observation of " + o.subject_id + " has the wrong number of regions");
    }
  }
  for (std::size_t r = 0; r < region_names.size(); ++r) {
    const Index d = region_dim(r);
    for (const auto& o : observations) {
      if (o.regions[r].size() != d) {
        throw Error(Errc::DimensionMismatch,
                    "region " + region_names[r] + " has inconsistent dimensions");
      }
    }
  }
}

}  // namespace corrface
