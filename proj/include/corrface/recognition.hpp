#pragma once

// Correlation matching on top of paired subspace models. Gallery features go
// through the x side of a model and probe features through the y side.

#include "corrface/subspace.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace corrface {

// x_hat = W_x^T (x - x_mean), y_hat = W_y^T (y - y_mean). Throws
// DimensionMismatch.
std::pair<Vector, Vector> project_pair(const PairedSubspaceModel& model,
                                       const Vector& x_input, const Vector& y_input);
Vector project_x(const PairedSubspaceModel& model, const Vector& x_input);
Vector project_y(const PairedSubspaceModel& model, const Vector& y_input);

struct MatchScore {
  double value = 0.0;
  // One side projected to exactly zero; value is then 0.
  bool zero_projection = false;
};

// Cosine of the two projections.
MatchScore score(const Vector& x_hat, const Vector& y_hat);

// Arithmetic mean; throws EmptyScores.
double fuse(std::span<const double> scores);

struct RegionClassifier {
  PairedSubspaceModel model;
  std::string region;
};

class FusedMatcher {
 public:
  // Throws InvalidArgument for no classifiers or repeated regions.
  explicit FusedMatcher(std::vector<RegionClassifier> classifiers);

  const std::vector<RegionClassifier>& classifiers() const { return classifiers_; }
  std::size_t size() const { return classifiers_.size(); }
  std::vector<std::string> regions() const;

 private:
  std::vector<RegionClassifier> classifiers_;
};

// Per-region feature vectors of one image, in matcher region order. A region
// marked invalid (e.g. clamped landmark window) is left out of the fusion.
struct MultiRegionFeatures {
  std::vector<std::string> regions;
  std::vector<Vector> values;
  std::vector<bool> valid;

  void add(std::string region, Vector v, bool ok = true) {
    regions.push_back(std::move(region));
    values.push_back(std::move(v));
    valid.push_back(ok);
  }
};

struct GalleryEntry {
  std::string identity;
  MultiRegionFeatures features;
};

struct RankedIdentity {
  std::string identity;
  double score = 0.0;
  std::size_t regions_used = 0;
};

struct Identification {
  std::vector<RankedIdentity> ranking;  // best first
  bool zero_projection = false;
  // Fewer regions than classifiers contributed to at least one entry.
  bool regions_dropped = false;

  const std::string& top() const { return ranking.front().identity; }
};

// Collapses per-entry fused scores to one row per identity (max over its
// entries) and sorts best first; equal scores keep first-insertion order.
std::vector<RankedIdentity> rank_identities(const std::vector<std::string>& entry_identity,
                                            const std::vector<double>& entry_score,
                                            const std::vector<std::size_t>& entry_regions);

// Gallery projections computed once and reused across probes.
class EnrolledGallery {
 public:
  // Throws EmptyGallery, RegionMismatch, DimensionMismatch.
  EnrolledGallery(const FusedMatcher& matcher, const std::vector<GalleryEntry>& gallery);

  const FusedMatcher& matcher() const { return *matcher_; }
  std::size_t size() const { return identities_.size(); }

  // Multiple entries per identity are scored by their max; ties keep first
  // insertion order. Throws RegionMismatch, DimensionMismatch.
  Identification identify(const MultiRegionFeatures& probe) const;

 private:
  const FusedMatcher* matcher_;
  std::vector<std::string> identities_;  // distinct, first-seen order
  std::vector<std::size_t> owner_;  // entry -> identity index
  std::vector<std::vector<Vector>> projections_;  // [entry][region]
  std::vector<std::vector<bool>> valid_;
};

Identification identify(const FusedMatcher& matcher,
                        const std::vector<GalleryEntry>& gallery,
                        const MultiRegionFeatures& probe);

}  // namespace corrface
