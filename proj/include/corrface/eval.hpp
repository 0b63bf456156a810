#pragma once

// Recognition protocols over pose datasets and score histograms.

#include "corrface/pose_data.hpp"
#include "corrface/recognition.hpp"
#include "corrface/subspace.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace corrface {

enum class FeatureMode { Holistic, Local, HolisticPlusLocal };

std::string_view to_string(FeatureMode mode);
FeatureMode feature_mode_from_string(std::string_view name);

// Regions of `names` used by a mode ("holistic" vs everything else).
std::vector<std::string> regions_for(FeatureMode mode, const std::vector<std::string>& names);

struct ProtocolConfig {
  double gallery_pose = 0.0;
  std::vector<double> probe_poses;  // empty: every pose in the test data
  FeatureMode feature_mode = FeatureMode::HolisticPlusLocal;
  Method method = Method::CCA;
  double alpha = 1e-6;
  Index k = 8;
  std::optional<Index> pca_retained;
  std::size_t top_n = 5;
  int jobs = 1;
  std::uint64_t seed = 0;  // recorded in reports only
};

// Training pairs for (gallery pose g, probe pose p): every image of a subject
// at g against every image of the same subject at p, minus an observation
// paired with itself (kept only when nothing else exists).
CoupledDataset pose_pair_dataset(const PoseDataset& data, double gallery_pose,
                                 double probe_pose, std::size_t region);

struct ModelKey {
  double gallery_pose = 0.0;
  double probe_pose = 0.0;
  std::string region;
  auto operator<=>(const ModelKey&) const = default;
};

using ModelSource = std::function<PairedSubspaceModel(const ModelKey&)>;

// Trains on demand from a training pose dataset.
ModelSource training_source(const PoseDataset& train, const ProtocolConfig& config);

class ModelStore {
 public:
  explicit ModelStore(ModelSource source) : source_(std::move(source)) {}

  // Fills missing keys, in parallel when jobs > 1.
  void prefetch(const std::vector<ModelKey>& keys, int jobs);
  // Not thread-safe when the key is missing; prefetch first.
  const PairedSubspaceModel& get(const ModelKey& key);
  const std::map<ModelKey, PairedSubspaceModel>& models() const { return models_; }

 private:
  ModelSource source_;
  std::map<ModelKey, PairedSubspaceModel> models_;
};

struct ProbeRecord {
  std::string subject_id;
  int image_index = 0;
  std::vector<std::string> top;  // best first, up to top_n
  std::vector<double> top_scores;
  std::size_t true_rank = 0;     // 1-based; 0 when absent from the gallery
  bool regions_dropped = false;
};

struct CellResult {
  double gallery_pose = 0.0;
  double model_pose = 0.0;  // probe pose the model was trained for
  double probe_pose = 0.0;  // real pose of the probes
  std::size_t probes = 0;
  std::size_t correct = 0;
  double rank1 = 0.0;
  double baseline_rank1 = 0.0;  // raw-feature cosine, same regions
  std::map<std::string, double> region_rank1;
  std::vector<ProbeRecord> records;
};

struct DegradationPoint {
  double pose_gap = 0.0;
  double mean_rank1 = 0.0;
  std::size_t cells = 0;
};

struct RecognitionReport {
  std::string protocol;
  ProtocolConfig config;
  std::vector<double> row_poses;  // gallery poses or estimated probe poses
  std::vector<double> col_poses;  // probe poses (real)
  std::vector<CellResult> cells;  // row-major over (row, col)
  Matrix rank1;
  Matrix baseline_rank1;
  double mean_rank1 = 0.0;
  double mean_baseline_rank1 = 0.0;
  std::vector<DegradationPoint> degradation;  // unknown-pose only

  const CellResult& cell(std::size_t row, std::size_t col) const {
    return cells[row * col_poses.size() + col];
  }
};

// Every ordered (gallery, probe) pose pair; throws InsufficientSubjects.
RecognitionReport run_all_vs_all(const ProtocolConfig& config, const PoseDataset& test,
                                 ModelStore& models);

// Probes of real pose r scored with the model for (gallery, e).
RecognitionReport run_unknown_probe_pose(const ProtocolConfig& config,
                                         const PoseDataset& test, ModelStore& models);

// Rank-1 rate recounted from the stored per-probe lists.
double recount_rank1(const CellResult& cell);

struct Histogram {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  double mean = 0.0;
  double variance = 0.0;
};

Histogram make_histogram(const std::vector<double>& values, std::size_t bins,
                         double lo = -1.0, double hi = 1.0);
double bhattacharyya(const Histogram& a, const Histogram& b);

struct ModelHistogram {
  std::string label;
  Method method = Method::CCA;
  Histogram intra;
  Histogram inter;
  double bhattacharyya = 0.0;
};

struct HistogramReport {
  std::size_t bins = 50;
  std::size_t intra_pairs = 0;
  std::size_t inter_pairs = 0;
  bool raw_available = false;  // needs equal view dimensions
  Histogram raw_intra;
  Histogram raw_inter;
  double raw_bhattacharyya = 0.0;
  std::vector<ModelHistogram> models;
};

// Scores every x column against every y column of the test set, split by
// whether the subjects agree. Throws InsufficientSubjects.
HistogramReport score_histograms(
    const std::vector<std::pair<std::string, PairedSubspaceModel>>& models,
    const CoupledDataset& test, std::size_t bins = 50);

}  // namespace corrface
