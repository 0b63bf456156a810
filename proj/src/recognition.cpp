#include "corrface/recognition.hpp"

#include "corrface/error.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace corrface {

namespace {

void check_dim(Index got, Index want, const char* side) {
  if (got != want) {
    throw Error(Errc::DimensionMismatch,
                std::string(side) + " input has dimension " + std::to_string(got) +
                    " but the model expects " + std::to_string(want));
  }
}

void check_regions(const FusedMatcher& matcher, const MultiRegionFeatures& f,
                   const char* what) {
  if (f.regions.size() != f.values.size() || f.regions.size() != f.valid.size()) {
    throw Error(Errc::InvalidArgument, std::string(what) + " features are malformed");
  }
  const auto& cls = matcher.classifiers();
  bool ok = f.regions.size() == cls.size();
  for (std::size_t r = 0; ok && r < cls.size(); ++r) ok = f.regions[r] == cls[r].region;
  if (!ok) {
    throw Error(Errc::RegionMismatch,
                std::string(what) + " regions do not line up with the matcher");
  }
}

}  // namespace

Vector project_x(const PairedSubspaceModel& model, const Vector& x_input) {
  check_dim(x_input.size(), model.x_dim(), "x");
  return model.w_x.transpose() * (x_input - model.x_mean);
}

Vector project_y(const PairedSubspaceModel& model, const Vector& y_input) {
  check_dim(y_input.size(), model.y_dim(), "y");
  return model.w_y.transpose() * (y_input - model.y_mean);
}

std::pair<Vector, Vector> project_pair(const PairedSubspaceModel& model,
                                       const Vector& x_input, const Vector& y_input) {
  return {project_x(model, x_input), project_y(model, y_input)};
}

MatchScore score(const Vector& x_hat, const Vector& y_hat) {
  if (x_hat.size() != y_hat.size()) {
    throw Error(Errc::DimensionMismatch, "projections differ in length");
  }
  const double nx = x_hat.norm();
  const double ny = y_hat.norm();
  if (nx == 0.0 || ny == 0.0) return {0.0, true};
  return {std::clamp(x_hat.dot(y_hat) / (nx * ny), -1.0, 1.0), false};
}

double fuse(std::span<const double> scores) {
  if (scores.empty()) throw Error(Errc::EmptyScores, "no scores to fuse");
  return std::accumulate(scores.begin(), scores.end(), 0.0) / double(scores.size());
}

FusedMatcher::FusedMatcher(std::vector<RegionClassifier> classifiers)
    : classifiers_(std::move(classifiers)) {
  if (classifiers_.empty()) {
    throw Error(Errc::InvalidArgument, "a matcher needs at least one classifier");
  }
  std::set<std::string> seen;
  for (const auto& c : classifiers_) {
    if (!seen.insert(c.region).second) {
      throw Error(Errc::InvalidArgument, "region '" + c.region + "' appears twice");
    }
  }
}

std::vector<std::string> FusedMatcher::regions() const {
  std::vector<std::string> out;
  for (const auto& c : classifiers_) out.push_back(c.region);
  return out;
}

std::vector<RankedIdentity> rank_identities(const std::vector<std::string>& entry_identity,
                                            const std::vector<double>& entry_score,
                                            const std::vector<std::size_t>& entry_regions) {
  if (entry_identity.size() != entry_score.size() ||
      entry_identity.size() != entry_regions.size()) {
    throw Error(Errc::InvalidArgument, "ranking inputs differ in length");
  }
  std::vector<RankedIdentity> best;
  for (std::size_t e = 0; e < entry_identity.size(); ++e) {
    auto it = std::find_if(best.begin(), best.end(), [&](const RankedIdentity& r) {
      return r.identity == entry_identity[e];
    });
    if (it == best.end()) {
      best.push_back({entry_identity[e], entry_score[e], entry_regions[e]});
    } else if (entry_score[e] > it->score) {
      it->score = entry_score[e];
      it->regions_used = entry_regions[e];
    }
  }
  std::stable_sort(best.begin(), best.end(), [](const RankedIdentity& a, const RankedIdentity& b) {
    return a.score > b.score;
  });
  return best;
}

EnrolledGallery::EnrolledGallery(const FusedMatcher& matcher,
                                 const std::vector<GalleryEntry>& gallery)
    : matcher_(&matcher) {
  if (gallery.empty()) throw Error(Errc::EmptyGallery, "gallery is empty");
  const auto& cls = matcher.classifiers();
  for (const auto& entry : gallery) {
    check_regions(matcher, entry.features, "gallery");
    auto it = std::find(identities_.begin(), identities_.end(), entry.identity);
    if (it == identities_.end()) {
      identities_.push_back(entry.identity);
      owner_.push_back(identities_.size() - 1);
    } else {
      owner_.push_back(static_cast<std::size_t>(it - identities_.begin()));
    }
    std::vector<Vector> proj(cls.size());
    for (std::size_t r = 0; r < cls.size(); ++r) {
      if (entry.features.valid[r]) proj[r] = project_x(cls[r].model, entry.features.values[r]);
    }
    projections_.push_back(std::move(proj));
    valid_.push_back(entry.features.valid);
  }
}

Identification EnrolledGallery::identify(const MultiRegionFeatures& probe) const {
  const auto& cls = matcher_->classifiers();
  check_regions(*matcher_, probe, "probe");
  std::vector<Vector> probe_proj(cls.size());
  for (std::size_t r = 0; r < cls.size(); ++r) {
    if (probe.valid[r]) probe_proj[r] = project_y(cls[r].model, probe.values[r]);
  }

  Identification out;
  std::vector<std::string> ids;
  std::vector<double> fused;
  std::vector<std::size_t> used;
  std::vector<double> parts;
  for (std::size_t e = 0; e < projections_.size(); ++e) {
    parts.clear();
    for (std::size_t r = 0; r < cls.size(); ++r) {
      if (!probe.valid[r] || !valid_[e][r]) continue;
      const MatchScore s = score(projections_[e][r], probe_proj[r]);
      out.zero_projection = out.zero_projection || s.zero_projection;
      parts.push_back(s.value);
    }
    if (parts.size() < cls.size()) out.regions_dropped = true;
    ids.push_back(identities_[owner_[e]]);
    // An entry with nothing left to compare sits at the bottom of the range.
    fused.push_back(parts.empty() ? -1.0 : fuse(parts));
    used.push_back(parts.size());
  }
  out.ranking = rank_identities(ids, fused, used);
  return out;
}

Identification identify(const FusedMatcher& matcher,
                        const std::vector<GalleryEntry>& gallery,
                        const MultiRegionFeatures& probe) {
  return EnrolledGallery(matcher, gallery).identify(probe);
}

}  // namespace corrface
