#include "corrface/pipeline.hpp"

#include "corrface/error.hpp"
#include "corrface/parallel.hpp"

#include <map>
#include <utility>

namespace corrface {

std::vector<std::string> default_region_names() {
  std::vector<std::string> names{"holistic"};
  for (Landmark l : kLandmarks) names.emplace_back(landmark_name(l));
  return names;
}

Observation extract_observation(const FaceSample& sample, const GaborBank& bank) {
  const NormalizedFace face = normalize_face(sample);
  Observation obs;
  obs.subject_id = sample.subject_id;
  obs.pose_deg = sample.pose_deg;
  obs.regions.push_back(extract_holistic(face).values);
  obs.valid.push_back(true);
  for (Landmark l : kLandmarks) {
    FeatureVector fv = extract_local_gabor(face, bank, l);
    obs.valid.push_back(!fv.clamped);
    obs.regions.push_back(std::move(fv.values));
  }
  return obs;
}

PoseDataset extract_dataset(const std::vector<FaceSample>& samples, const GaborBank& bank,
                            int jobs, const std::vector<std::string>* labels) {
  PoseDataset data;
  data.region_names = default_region_names();
  data.observations.resize(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    try {
      data.observations[i] = extract_observation(samples[i], bank);
    } catch (const Error& e) {
      if (labels == nullptr) throw;
      throw Error(e.code(), (*labels)[i] + ": " + e.what());
    }
  });
  std::map<std::pair<std::string, double>, int> seen;
  for (auto& o : data.observations) o.image_index = seen[{o.subject_id, o.pose_deg}]++;
  return data;
}

}  // namespace corrface
