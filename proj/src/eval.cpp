#include "corrface/eval.hpp"

#include "corrface/error.hpp"
#include "corrface/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace corrface {

namespace {

bool same_pose(double a, double b) { return std::abs(a - b) < 1e-9; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Observations grouped per subject, subjects in first-seen order.
std::vector<std::vector<const Observation*>> by_subject(const PoseDataset& data) {
  std::map<std::string, std::size_t> slot;
  std::vector<std::vector<const Observation*>> groups;
  for (const auto& o : data.observations) {
    auto [it, fresh] = slot.emplace(o.subject_id, groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(&o);
  }
  return groups;
}

MultiRegionFeatures features_of(const Observation& obs, const std::vector<std::string>& regions,
                                const std::vector<std::size_t>& index) {
  MultiRegionFeatures f;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    f.add(regions[r], obs.regions[index[r]], obs.valid[index[r]]);
  }
  return f;
}

struct CellPlan {
  double gallery_pose;
  double model_pose;
  double probe_pose;
};

// Gallery: lowest image index of each subject at the gallery pose. Probes:
// everything at the probe pose except the gallery images themselves.
struct Split {
  std::vector<const Observation*> gallery;
  std::vector<const Observation*> probes;
};

Split split_for(const PoseDataset& test, double gallery_pose, double probe_pose) {
  Split s;
  for (const auto& group : by_subject(test)) {
    const Observation* best = nullptr;
    for (const Observation* o : group) {
      if (same_pose(o->pose_deg, gallery_pose) &&
          (best == nullptr || o->image_index < best->image_index)) {
        best = o;
      }
    }
    if (best != nullptr) s.gallery.push_back(best);
  }
  for (const auto& o : test.observations) {
    if (!same_pose(o.pose_deg, probe_pose)) continue;
    if (std::find(s.gallery.begin(), s.gallery.end(), &o) != s.gallery.end()) continue;
    s.probes.push_back(&o);
  }
  if (s.probes.empty()) {
    for (const auto& o : test.observations) {
      if (same_pose(o.pose_deg, probe_pose)) s.probes.push_back(&o);
    }
  }
  return s;
}

std::size_t rank_of(const std::vector<RankedIdentity>& ranking, const std::string& id) {
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i].identity == id) return i + 1;
  }
  return 0;
}

CellResult run_cell(const ProtocolConfig& config, const PoseDataset& test,
                    const std::map<ModelKey, const PairedSubspaceModel*>& models,
                    const CellPlan& plan) {
  const std::vector<std::string> regions = regions_for(config.feature_mode, test.region_names);
  std::vector<std::size_t> index;
  for (const auto& r : regions) index.push_back(test.region_index(r));

  const Split split = split_for(test, plan.gallery_pose, plan.probe_pose);
  if (split.gallery.size() < 2) {
    throw Error(Errc::InsufficientSubjects,
                "fewer than 2 test subjects at gallery pose " + std::to_string(plan.gallery_pose));
  }

  std::vector<RegionClassifier> classifiers;
  for (const auto& r : regions) {
    classifiers.push_back({*models.at({plan.gallery_pose, plan.model_pose, r}), r});
  }
  const FusedMatcher matcher(classifiers);
  std::vector<GalleryEntry> gallery;
  std::vector<std::string> gallery_ids;
  for (const Observation* o : split.gallery) {
    gallery.push_back({o->subject_id, features_of(*o, regions, index)});
    gallery_ids.push_back(o->subject_id);
  }
  const EnrolledGallery enrolled(matcher, gallery);

  // single-region matchers for the per-region diagnostics
  std::vector<FusedMatcher> singles;
  for (const auto& c : classifiers) singles.emplace_back(std::vector<RegionClassifier>{c});
  std::vector<EnrolledGallery> single_galleries;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    std::vector<GalleryEntry> g;
    for (const Observation* o : split.gallery) {
      MultiRegionFeatures f;
      f.add(regions[r], o->regions[index[r]], o->valid[index[r]]);
      g.push_back({o->subject_id, std::move(f)});
    }
    single_galleries.emplace_back(singles[r], g);
  }

  CellResult cell;
  cell.gallery_pose = plan.gallery_pose;
  cell.model_pose = plan.model_pose;
  cell.probe_pose = plan.probe_pose;
  cell.probes = split.probes.size();
  std::vector<std::size_t> region_correct(regions.size(), 0);
  std::size_t baseline_correct = 0;

  for (const Observation* p : split.probes) {
    const MultiRegionFeatures pf = features_of(*p, regions, index);
    const Identification id = enrolled.identify(pf);
    ProbeRecord rec;
    rec.subject_id = p->subject_id;
    rec.image_index = p->image_index;
    rec.regions_dropped = id.regions_dropped;
    for (std::size_t i = 0; i < std::min(config.top_n, id.ranking.size()); ++i) {
      rec.top.push_back(id.ranking[i].identity);
      rec.top_scores.push_back(id.ranking[i].score);
    }
    rec.true_rank = rank_of(id.ranking, p->subject_id);
    if (rec.true_rank == 1) ++cell.correct;
    cell.records.push_back(std::move(rec));

    for (std::size_t r = 0; r < regions.size(); ++r) {
      MultiRegionFeatures one;
      one.add(regions[r], pf.values[r], pf.valid[r]);
      if (single_galleries[r].identify(one).top() == p->subject_id) ++region_correct[r];
    }

    // raw-feature cosine baseline over the same regions
    std::vector<double> fused;
    std::vector<std::size_t> used;
    for (const Observation* g : split.gallery) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t r = 0; r < regions.size(); ++r) {
        const Vector& a = g->regions[index[r]];
        const Vector& b = p->regions[index[r]];
        if (!g->valid[index[r]] || !p->valid[index[r]] || a.size() != b.size()) continue;
        sum += score(a, b).value;
        ++n;
      }
      fused.push_back(n == 0 ? -1.0 : sum / double(n));
      used.push_back(n);
    }
    const auto ranking = rank_identities(gallery_ids, fused, used);
    if (ranking.front().identity == p->subject_id) ++baseline_correct;
  }
  const double n = std::max<double>(1.0, double(cell.probes));
  cell.rank1 = double(cell.correct) / n;
  cell.baseline_rank1 = double(baseline_correct) / n;
  for (std::size_t r = 0; r < regions.size(); ++r) {
    cell.region_rank1[regions[r]] = double(region_correct[r]) / n;
  }
  return cell;
}

RecognitionReport run_plans(const std::string& protocol, const ProtocolConfig& config,
                            const PoseDataset& test, ModelStore& store,
                            std::vector<double> rows, std::vector<double> cols,
                            const std::vector<CellPlan>& plans) {
  test.validate();
  if (test.subjects().size() < 2) {
    throw Error(Errc::InsufficientSubjects, "need at least 2 test subjects");
  }
  const auto regions = regions_for(config.feature_mode, test.region_names);
  if (regions.empty()) {
    throw Error(Errc::RegionMismatch, "feature mode selects no region of the dataset");
  }
  std::vector<ModelKey> keys;
  for (const auto& p : plans) {
    for (const auto& r : regions) keys.push_back({p.gallery_pose, p.model_pose, r});
  }
  store.prefetch(keys, config.jobs);
  std::map<ModelKey, const PairedSubspaceModel*> models;
  for (const auto& k : keys) models[k] = &store.get(k);

  RecognitionReport report;
  report.protocol = protocol;
  report.config = config;
  report.row_poses = std::move(rows);
  report.col_poses = std::move(cols);
  report.cells.resize(plans.size());
  parallel_for(plans.size(), config.jobs, [&](std::size_t i) {
    report.cells[i] = run_cell(config, test, models, plans[i]);
  });
  const auto nr = static_cast<Index>(report.row_poses.size());
  const auto nc = static_cast<Index>(report.col_poses.size());
  report.rank1.resize(nr, nc);
  report.baseline_rank1.resize(nr, nc);
  for (Index r = 0; r < nr; ++r) {
    for (Index c = 0; c < nc; ++c) {
      const CellResult& cell = report.cells[std::size_t(r * nc + c)];
      report.rank1(r, c) = cell.rank1;
      report.baseline_rank1(r, c) = cell.baseline_rank1;
    }
  }
  report.mean_rank1 = report.rank1.mean();
  report.mean_baseline_rank1 = report.baseline_rank1.mean();
  return report;
}

}  // namespace

std::string_view to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::Holistic: return "holistic";
    case FeatureMode::Local: return "local";
    case FeatureMode::HolisticPlusLocal: return "holistic+local";
  }
  return "holistic+local";
}

FeatureMode feature_mode_from_string(std::string_view name) {
  const std::string n = lower(name);
  if (n == "holistic") return FeatureMode::Holistic;
  if (n == "local") return FeatureMode::Local;
  if (n == "holistic+local" || n == "holisticpluslocal" || n == "fused" || n == "all") {
    return FeatureMode::HolisticPlusLocal;
  }
  throw Error(Errc::InvalidArgument, "unknown feature mode '" + std::string(name) + "'");
}

std::vector<std::string> regions_for(FeatureMode mode, const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& n : names) {
    const bool holistic = n == "holistic";
    if (mode == FeatureMode::HolisticPlusLocal || (mode == FeatureMode::Holistic) == holistic) {
      out.push_back(n);
    }
  }
  return out;
}

CoupledDataset pose_pair_dataset(const PoseDataset& data, double gallery_pose,
                                 double probe_pose, std::size_t region) {
  struct Pair {
    const Observation* x;
    const Observation* y;
  };
  std::vector<Pair> pairs;
  std::vector<Pair> self_pairs;
  for (const auto& group : by_subject(data)) {
    for (const Observation* a : group) {
      if (!same_pose(a->pose_deg, gallery_pose) || !a->valid[region]) continue;
      for (const Observation* b : group) {
        if (!same_pose(b->pose_deg, probe_pose) || !b->valid[region]) continue;
        (a == b ? self_pairs : pairs).push_back({a, b});
      }
    }
  }
  if (pairs.empty()) pairs = self_pairs;
  if (pairs.size() < 2) {
    throw Error(Errc::InsufficientSubjects,
                "fewer than 2 training pairs for poses " + std::to_string(gallery_pose) +
                    " / " + std::to_string(probe_pose));
  }
  CoupledDataset out;
  const Index dx = pairs.front().x->regions[region].size();
  const Index dy = pairs.front().y->regions[region].size();
  out.x_view.resize(dx, Index(pairs.size()));
  out.y_view.resize(dy, Index(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.x_view.col(Index(i)) = pairs[i].x->regions[region];
    out.y_view.col(Index(i)) = pairs[i].y->regions[region];
    out.subject_ids.push_back(pairs[i].x->subject_id);
  }
  out.pose_labels = {gallery_pose, probe_pose};
  return out;
}

ModelSource training_source(const PoseDataset& train, const ProtocolConfig& config) {
  TrainingOptions opts;
  opts.solver.method = config.method;
  opts.solver.alpha = config.alpha;
  opts.solver.k = config.k;
  opts.pca_retained = config.pca_retained;
  return [&train, opts](const ModelKey& key) {
    const CoupledDataset data =
        pose_pair_dataset(train, key.gallery_pose, key.probe_pose, train.region_index(key.region));
    PairedSubspaceModel m = train_model(data, opts);
    m.region = key.region;
    return m;
  };
}

void ModelStore::prefetch(const std::vector<ModelKey>& keys, int jobs) {
  std::vector<ModelKey> missing;
  for (const auto& k : keys) {
    if (!models_.contains(k) && std::find(missing.begin(), missing.end(), k) == missing.end()) {
      missing.push_back(k);
    }
  }
  std::vector<PairedSubspaceModel> trained(missing.size());
  parallel_for(missing.size(), jobs, [&](std::size_t i) { trained[i] = source_(missing[i]); });
  for (std::size_t i = 0; i < missing.size(); ++i) models_.emplace(missing[i], std::move(trained[i]));
}

const PairedSubspaceModel& ModelStore::get(const ModelKey& key) {
  auto it = models_.find(key);
  if (it == models_.end()) it = models_.emplace(key, source_(key)).first;
  return it->second;
}

RecognitionReport run_all_vs_all(const ProtocolConfig& config, const PoseDataset& test,
                                 ModelStore& models) {
  const std::vector<double> poses =
      config.probe_poses.empty() ? test.poses() : config.probe_poses;
  if (poses.size() < 2) {
    throw Error(Errc::InvalidArgument, "all-vs-all needs at least 2 poses");
  }
  std::vector<CellPlan> plans;
  for (double g : poses)
    for (double p : poses) plans.push_back({g, p, p});
  return run_plans("all-vs-all", config, test, models, poses, poses, plans);
}

RecognitionReport run_unknown_probe_pose(const ProtocolConfig& config,
                                         const PoseDataset& test, ModelStore& models) {
  const std::vector<double> poses =
      config.probe_poses.empty() ? test.poses() : config.probe_poses;
  if (poses.empty()) throw Error(Errc::InvalidArgument, "no probe poses");
  std::vector<CellPlan> plans;
  for (double e : poses)
    for (double r : poses) plans.push_back({config.gallery_pose, e, r});
  RecognitionReport report =
      run_plans("unknown-pose", config, test, models, poses, poses, plans);

  std::map<long long, DegradationPoint> by_gap;
  for (const auto& cell : report.cells) {
    const double gap = std::abs(cell.model_pose - cell.probe_pose);
    auto& d = by_gap[std::llround(gap * 1e6)];
    d.pose_gap = gap;
    d.mean_rank1 += cell.rank1;
    ++d.cells;
  }
  for (auto& [key, d] : by_gap) {
    d.mean_rank1 /= double(d.cells);
    report.degradation.push_back(d);
  }
  return report;
}

double recount_rank1(const CellResult& cell) {
  if (cell.records.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : cell.records) {
    if (!r.top.empty() && r.top.front() == r.subject_id) ++hits;
  }
  return double(hits) / double(cell.records.size());
}

Histogram make_histogram(const std::vector<double>& values, std::size_t bins, double lo,
                         double hi) {
  if (bins == 0 || !(hi > lo)) throw Error(Errc::InvalidArgument, "bad histogram range");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  h.total = values.size();
  for (double v : values) {
    const double t = (v - lo) / (hi - lo) * double(bins);
    const auto b = static_cast<std::size_t>(std::clamp(t, 0.0, double(bins) - 1.0));
    ++h.counts[b];
    h.mean += v;
  }
  if (!values.empty()) {
    h.mean /= double(values.size());
    for (double v : values) h.variance += (v - h.mean) * (v - h.mean);
    h.variance /= double(values.size());
  }
  return h;
}

double bhattacharyya(const Histogram& a, const Histogram& b) {
  if (a.counts.size() != b.counts.size() || a.total == 0 || b.total == 0) return 0.0;
  double bc = 0.0;
  for (std::size_t i = 0; i < a.counts.size(); ++i) {
    bc += std::sqrt(double(a.counts[i]) / double(a.total) * double(b.counts[i]) / double(b.total));
  }
  return bc;
}

HistogramReport score_histograms(
    const std::vector<std::pair<std::string, PairedSubspaceModel>>& models,
    const CoupledDataset& test, std::size_t bins) {
  test.validate();
  std::set<std::string> subjects(test.subject_ids.begin(), test.subject_ids.end());
  if (subjects.size() < 2 || test.subject_ids.size() != std::size_t(test.size())) {
    throw Error(Errc::InsufficientSubjects, "histograms need at least 2 labelled subjects");
  }
  const Index n = test.size();
  HistogramReport report;
  report.bins = bins;

  auto collect = [&](const Matrix& xs, const Matrix& ys, std::vector<double>& intra,
                     std::vector<double>& inter) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        const double s = score(xs.col(i), ys.col(j)).value;
        (test.subject_ids[std::size_t(i)] == test.subject_ids[std::size_t(j)] ? intra : inter)
            .push_back(s);
      }
    }
  };

  if (test.x_view.rows() == test.y_view.rows()) {
    std::vector<double> intra, inter;
    collect(test.x_view, test.y_view, intra, inter);
    report.raw_available = true;
    report.raw_intra = make_histogram(intra, bins);
    report.raw_inter = make_histogram(inter, bins);
    report.raw_bhattacharyya = bhattacharyya(report.raw_intra, report.raw_inter);
    report.intra_pairs = intra.size();
    report.inter_pairs = inter.size();
  }
  for (const auto& [label, model] : models) {
    if (model.x_dim() != test.x_view.rows() || model.y_dim() != test.y_view.rows()) {
      throw Error(Errc::DimensionMismatch, "model '" + label + "' does not match the data");
    }
    const Matrix xs = model.w_x.transpose() * (test.x_view.colwise() - model.x_mean);
    const Matrix ys = model.w_y.transpose() * (test.y_view.colwise() - model.y_mean);
    std::vector<double> intra, inter;
    collect(xs, ys, intra, inter);
    ModelHistogram mh;
    mh.label = label;
    mh.method = model.method;
    mh.intra = make_histogram(intra, bins);
    mh.inter = make_histogram(inter, bins);
    mh.bhattacharyya = bhattacharyya(mh.intra, mh.inter);
    report.intra_pairs = intra.size();
    report.inter_pairs = inter.size();
    report.models.push_back(std::move(mh));
  }
  return report;
}

}  // namespace corrface
