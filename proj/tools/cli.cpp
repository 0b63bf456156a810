#include "cli.hpp"

#include "corrface/eval.hpp"
#include "corrface/image.hpp"
#include "corrface/manifest.hpp"
#include "corrface/model_io.hpp"
#include "corrface/parallel.hpp"
#include "corrface/pipeline.hpp"
#include "corrface/report.hpp"
#include "corrface/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

namespace corrface::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct SynthSettings {
  int n_train_subjects = 50;
  int n_test_subjects = 50;
  std::vector<double> poses_deg{0.0, 45.0};
  int images_per_pose = 1;
  int width = 160;
  int height = 200;
  double occlusion_fraction = 0.15;
  double yaw_gain = 1.0;
  double jitter_deg = 3.0;
  double jitter_scale = 0.04;
  double jitter_shift = 3.0;
  double illumination = 0.08;
  double noise_sigma = 0.02;
};

struct TrainSettings {
  fs::path manifest;
  std::string method = "cca";
  double alpha = 1e-6;
  long k = 256;  // clamped to the training rank at desk scale
  std::optional<long> pca_retained;
  std::string feature_mode = "holistic+local";
  std::string pose_pairs = "all";  // or "gallery"
  double gallery_pose = 0.0;
};

struct EvalSettings {
  fs::path manifest;
  fs::path models;
  std::string protocol = "all-vs-all";
  double gallery_pose = 0.0;
  std::vector<double> probe_poses;
  std::string feature_mode = "holistic+local";
  long top_n = 5;
};

struct HistSettings {
  fs::path manifest;
  std::vector<fs::path> models;
  double gallery_pose = 0.0;
  std::optional<double> probe_pose;
  std::string region = "holistic";
  long bins = 50;
};

struct Settings {
  RunManifest run;
  SynthSettings synth;
  TrainSettings train;
  EvalSettings eval;
  HistSettings hist;
};

Error config_error(const std::string& msg) { return Error(Errc::Config, msg); }

// One object of the config file. Keys are checked against what was read so
// typos surface as errors instead of silently falling back to defaults.
class Section {
 public:
  Section(const json& j, std::string name, fs::path base)
      : j_(j), name_(std::move(name)), base_(std::move(base)) {
    if (!j_.is_object()) throw config_error(name_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& dst) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, std::optional<long>> || std::is_same_v<T, std::optional<double>>) {
      if (v.is_null()) {
        dst.reset();
        return;
      }
      typename T::value_type inner{};
      read(key, v, inner);
      dst = inner;
    } else {
      read(key, v, dst);
    }
  }

  void path(const char* key, fs::path& dst) {
    std::string s;
    if (!j_.contains(key)) return;
    get(key, s);
    dst = fs::path(s).is_relative() ? base_ / s : fs::path(s);
  }

  void paths(const char* key, std::vector<fs::path>& dst) {
    std::vector<std::string> v;
    if (!j_.contains(key)) return;
    get(key, v);
    dst.clear();
    for (const auto& s : v) dst.push_back(fs::path(s).is_relative() ? base_ / s : fs::path(s));
  }

  void mark(const char* key) { used_.insert(key); }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.contains(key)) throw config_error("unknown config key '" + name_ + key + "'");
    }
  }

 private:
  std::string where(const char* key) const { return name_ + key; }

  void read(const char* key, const json& v, std::string& dst) const {
    if (!v.is_string()) throw config_error(where(key) + ": expected a string");
    dst = v.get<std::string>();
  }
  void read(const char* key, const json& v, double& dst) const {
    if (!v.is_number()) throw config_error(where(key) + ": expected a number");
    dst = v.get<double>();
  }
  void read(const char* key, const json& v, std::uint64_t& dst) const {
    if (!v.is_number_unsigned()) throw config_error(where(key) + ": expected a non-negative integer");
    dst = v.get<std::uint64_t>();
  }
  template <class I>
    requires std::is_integral_v<I> && std::is_signed_v<I>
  void read(const char* key, const json& v, I& dst) const {
    if (!v.is_number_integer()) throw config_error(where(key) + ": expected an integer");
    dst = v.get<I>();
  }
  void read(const char* key, const json& v, std::vector<double>& dst) const {
    if (!v.is_array()) throw config_error(where(key) + ": expected an array of numbers");
    dst.clear();
    for (const auto& e : v) {
      if (!e.is_number()) throw config_error(where(key) + ": expected an array of numbers");
      dst.push_back(e.get<double>());
    }
  }
  void read(const char* key, const json& v, std::vector<std::string>& dst) const {
    if (!v.is_array()) throw config_error(where(key) + ": expected an array of strings");
    dst.clear();
    for (const auto& e : v) {
      if (!e.is_string()) throw config_error(where(key) + ": expected an array of strings");
      dst.push_back(e.get<std::string>());
    }
  }

  const json& j_;
  std::string name_;
  fs::path base_;
  std::set<std::string> used_;
};

void load_config_file(const fs::path& file, Settings& s) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw config_error("cannot open config file " + file.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw config_error("config file " + file.string() + ": " + e.what());
  }
  const fs::path base = file.parent_path();
  Section top(root, "", base);
  top.get("seed", s.run.seed);
  top.get("jobs", s.run.jobs);
  top.path("out", s.run.out_dir);

  if (root.is_object() && root.contains("synth")) {
    top.mark("synth");
    Section sec(root["synth"], "synth.", base);
    auto& t = s.synth;
    sec.get("n_train_subjects", t.n_train_subjects);
    sec.get("n_test_subjects", t.n_test_subjects);
    sec.get("poses_deg", t.poses_deg);
    sec.get("images_per_pose", t.images_per_pose);
    sec.get("width", t.width);
    sec.get("height", t.height);
    sec.get("occlusion_fraction", t.occlusion_fraction);
    sec.get("yaw_gain", t.yaw_gain);
    sec.get("jitter_deg", t.jitter_deg);
    sec.get("jitter_scale", t.jitter_scale);
    sec.get("jitter_shift", t.jitter_shift);
    sec.get("illumination", t.illumination);
    sec.get("noise_sigma", t.noise_sigma);
    sec.finish();
  }
  if (root.is_object() && root.contains("train")) {
    top.mark("train");
    Section sec(root["train"], "train.", base);
    auto& t = s.train;
    sec.path("manifest", t.manifest);
    sec.get("method", t.method);
    sec.get("alpha", t.alpha);
    sec.get("k", t.k);
    sec.get("pca_retained", t.pca_retained);
    sec.get("feature_mode", t.feature_mode);
    sec.get("pose_pairs", t.pose_pairs);
    sec.get("gallery_pose", t.gallery_pose);
    sec.finish();
  }
  if (root.is_object() && root.contains("evaluate")) {
    top.mark("evaluate");
    Section sec(root["evaluate"], "evaluate.", base);
    auto& t = s.eval;
    sec.path("manifest", t.manifest);
    sec.path("models", t.models);
    sec.get("protocol", t.protocol);
    sec.get("gallery_pose", t.gallery_pose);
    sec.get("probe_poses", t.probe_poses);
    sec.get("feature_mode", t.feature_mode);
    sec.get("top_n", t.top_n);
    sec.finish();
  }
  if (root.is_object() && root.contains("histogram")) {
    top.mark("histogram");
    Section sec(root["histogram"], "histogram.", base);
    auto& t = s.hist;
    sec.path("manifest", t.manifest);
    sec.paths("models", t.models);
    sec.get("gallery_pose", t.gallery_pose);
    sec.get("probe_pose", t.probe_pose);
    sec.get("region", t.region);
    sec.get("bins", t.bins);
    sec.finish();
  }
  top.finish();
}

std::string pose_label(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", p);
  return buf;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string model_file_name(const ModelKey& key) {
  return "g" + pose_label(key.gallery_pose) + "_p" + pose_label(key.probe_pose) + "_" +
         key.region + ".cfrm";
}

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  out.close();
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(Errc::Io, "cannot create output directory " + dir.string());
  }
}

struct Logger {
  std::ostream& err;
  int verbosity;

  template <class... T>
  void operator()(const T&... parts) const {
    if (verbosity > 0) ((err << parts), ...) << "\n";
  }
};

struct LoadedData {
  PoseDataset data;
  std::uint64_t digest = 0;  // manifest text plus every image file
};

LoadedData load_dataset(const fs::path& manifest, int jobs, const Logger& log) {
  const std::vector<std::uint8_t> text = slurp(manifest);
  const auto records =
      parse_manifest(std::string_view(reinterpret_cast<const char*>(text.data()), text.size()),
                     manifest.string());
  const fs::path base = manifest.parent_path();
  const auto samples = load_samples(records, base, jobs);
  std::vector<std::string> labels;
  LoadedData out;
  out.digest = fnv1a64(text.data(), text.size());
  for (const auto& r : records) {
    labels.push_back(r.image_path);
    fs::path p(r.image_path);
    const auto bytes = slurp(p.is_relative() ? base / p : p);
    out.digest = fnv1a64(bytes.data(), bytes.size(), out.digest);
  }
  log("extracting features from ", records.size(), " images in ", manifest.string());
  out.data = extract_dataset(samples, build_gabor_bank(), jobs, &labels);
  return out;
}

FeatureMode parse_mode(const std::string& name, const char* field) {
  try {
    return feature_mode_from_string(name);
  } catch (const Error&) {
    throw config_error(std::string(field) + ": unknown feature mode '" + name + "'");
  }
}

Method parse_method(const std::string& name) {
  Method m;
  try {
    m = method_from_string(name);
  } catch (const Error&) {
    throw config_error("train.method: unknown method '" + name + "'");
  }
  if (m == Method::PCA) throw config_error("train.method: must be cca or pls");
  return m;
}

// Loads trained models from a directory, checking them against the features
// they will be applied to.
class ModelDirectory {
 public:
  ModelDirectory(fs::path dir, const PoseDataset& data) : dir_(std::move(dir)), data_(data) {}

  PairedSubspaceModel load(const ModelKey& key) {
    const fs::path file = dir_ / model_file_name(key);
    if (!fs::exists(file)) {
      throw Error(Errc::Io, "missing model file " + file.string() +
                                " (train this pose pair and region first)");
    }
    const auto bytes = slurp(file);
    PairedSubspaceModel m;
    try {
      m = deserialize_model(bytes);
    } catch (const Error& e) {
      throw Error(e.code(), file.string() + ": " + e.what());
    }
    const Index dim = data_.region_dim(data_.region_index(key.region));
    if (m.x_dim() != dim || m.y_dim() != dim) {
      throw Error(Errc::DimensionMismatch,
                  file.string() + ": model dimensions " + std::to_string(m.x_dim()) + "/" +
                      std::to_string(m.y_dim()) + " do not match " + std::to_string(dim) +
                      "-dimensional '" + key.region + "' features");
    }
    if (m.region != key.region) {
      throw Error(Errc::RegionMismatch, file.string() + ": model was trained for region '" +
                                            m.region + "', not '" + key.region + "'");
    }
    std::lock_guard lock(mutex_);
    digests_[file.filename().string()] = hex(fnv1a64(bytes.data(), bytes.size()));
    return m;
  }

  ModelSource source() {
    return [this](const ModelKey& key) { return load(key); };
  }

  const std::map<std::string, std::string>& digests() const { return digests_; }

 private:
  fs::path dir_;
  const PoseDataset& data_;
  std::mutex mutex_;
  std::map<std::string, std::string> digests_;
};

// ---------------------------------------------------------------- synth

int cmd_synth(const Settings& s, std::ostream& out, const Logger& log) {
  const SynthSettings& t = s.synth;
  if (t.n_train_subjects < 2) throw config_error("synth.n_train_subjects must be >= 2");
  if (t.n_test_subjects < 2) throw config_error("synth.n_test_subjects must be >= 2");
  SyntheticRasterSpec base;
  base.width = t.width;
  base.height = t.height;
  base.poses_deg = t.poses_deg;
  base.images_per_subject_per_pose = t.images_per_pose;
  base.occlusion_fraction = t.occlusion_fraction;
  base.yaw_gain = t.yaw_gain;
  base.jitter_deg = t.jitter_deg;
  base.jitter_scale = t.jitter_scale;
  base.jitter_shift = t.jitter_shift;
  base.illumination = t.illumination;
  base.noise_sigma = t.noise_sigma;
  base.seed = s.run.seed;
  try {
    base.validate();
  } catch (const Error& e) {
    throw config_error(std::string("synth: ") + e.what());
  }

  const fs::path dir = s.run.out_dir;
  make_dir(dir / "images");
  std::size_t total = 0;
  for (const bool train : {true, false}) {
    SyntheticRasterSpec spec = base;
    spec.n_subjects = train ? t.n_train_subjects : t.n_test_subjects;
    spec.first_subject = train ? 0 : t.n_train_subjects;
    const std::vector<FaceSample> samples = generate_rasters(spec);
    std::vector<ManifestRecord> records;
    std::map<std::pair<std::string, double>, int> seen;
    for (const auto& smp : samples) {
      const int j = seen[{smp.subject_id, smp.pose_deg}]++;
      records.push_back({"images/" + smp.subject_id + "_p" + pose_label(smp.pose_deg) + "_" +
                             std::to_string(j) + ".pgm",
                         smp.subject_id, smp.pose_deg, smp.landmarks});
    }
    parallel_for(samples.size(), s.run.jobs,
                 [&](std::size_t i) { write_pgm(samples[i].image, dir / records[i].image_path); });
    const fs::path manifest = dir / (train ? "train_manifest.csv" : "test_manifest.csv");
    write_text(manifest, format_manifest(records));
    log("wrote ", manifest.string());
    out << (train ? "train" : "test") << ": " << spec.n_subjects << " subjects, "
        << samples.size() << " images -> " << manifest.string() << "\n";
    total += samples.size();
  }
  const json settings = {{"schema_version", kReportSchemaVersion},
                         {"seed", s.run.seed},
                         {"n_train_subjects", t.n_train_subjects},
                         {"n_test_subjects", t.n_test_subjects},
                         {"poses_deg", t.poses_deg},
                         {"images_per_pose", t.images_per_pose},
                         {"width", t.width},
                         {"height", t.height},
                         {"occlusion_fraction", t.occlusion_fraction},
                         {"yaw_gain", t.yaw_gain},
                         {"jitter_deg", t.jitter_deg},
                         {"jitter_scale", t.jitter_scale},
                         {"jitter_shift", t.jitter_shift},
                         {"illumination", t.illumination},
                         {"noise_sigma", t.noise_sigma}};
  write_text(dir / "synth.json", settings.dump(2) + "\n");
  log(total, " images in total");
  return kExitOk;
}

// ---------------------------------------------------------------- train

int cmd_train(const Settings& s, std::ostream& out, const Logger& log) {
  const TrainSettings& t = s.train;
  if (!(t.alpha >= 0.0) || !std::isfinite(t.alpha)) {
    throw config_error("train.alpha must be a finite value >= 0 (got " + format_number(t.alpha) + ")");
  }
  if (t.k < 1) throw config_error("train.k must be >= 1");
  if (t.pca_retained && *t.pca_retained < 1) throw config_error("train.pca_retained must be >= 1");
  if (t.pose_pairs != "all" && t.pose_pairs != "gallery") {
    throw config_error("train.pose_pairs must be 'all' or 'gallery'");
  }
  ProtocolConfig cfg;
  cfg.method = parse_method(t.method);
  cfg.feature_mode = parse_mode(t.feature_mode, "train.feature_mode");
  cfg.alpha = t.alpha;
  cfg.k = t.k;
  if (t.pca_retained) cfg.pca_retained = *t.pca_retained;
  cfg.jobs = s.run.jobs;
  cfg.seed = s.run.seed;
  cfg.gallery_pose = t.gallery_pose;

  const LoadedData loaded = load_dataset(t.manifest, s.run.jobs, log);
  const PoseDataset& data = loaded.data;
  const std::vector<double> poses = data.poses();
  std::vector<std::pair<double, double>> pairs;
  if (t.pose_pairs == "all") {
    for (double g : poses)
      for (double p : poses) pairs.emplace_back(g, p);
  } else {
    if (std::find(poses.begin(), poses.end(), t.gallery_pose) == poses.end()) {
      throw config_error("train.gallery_pose " + pose_label(t.gallery_pose) +
                         " does not occur in " + t.manifest.string());
    }
    for (double p : poses) pairs.emplace_back(t.gallery_pose, p);
  }
  std::vector<ModelKey> keys;
  for (const auto& [g, p] : pairs)
    for (const auto& r : regions_for(cfg.feature_mode, data.region_names)) keys.push_back({g, p, r});

  log("training ", keys.size(), " models");
  ModelStore store(training_source(data, cfg));
  store.prefetch(keys, s.run.jobs);

  const fs::path dir = s.run.out_dir / "models";
  make_dir(dir);
  json index = {{"schema_version", kReportSchemaVersion},
                {"kind", "models"},
                {"seed", s.run.seed},
                {"config", to_json(cfg)},
                {"train_data", hex(loaded.digest)},
                {"models", json::array()}};
  for (const auto& key : keys) {
    const PairedSubspaceModel& m = store.get(key);
    const auto bytes = serialize_model(m);
    const std::string name = model_file_name(key);
    write_bytes(dir / name, bytes);
    index["models"].push_back({{"file", name},
                               {"gallery_pose", key.gallery_pose},
                               {"probe_pose", key.probe_pose},
                               {"region", key.region},
                               {"fnv1a64", hex(fnv1a64(bytes.data(), bytes.size()))},
                               {"summary", model_summary(m)}});
    char line[160];
    std::snprintf(line, sizeof line, "%-32s k=%-4lld rho[0]=%.4f rho[k-1]=%.4f%s\n", name.c_str(),
                  static_cast<long long>(m.k()), m.k() ? m.rho(0) : 0.0,
                  m.k() ? m.rho(m.k() - 1) : 0.0, m.k_clamped ? " (k clamped)" : "");
    out << line;
  }
  write_text(dir / "models.json", index.dump(2) + "\n");
  out << keys.size() << " models -> " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- reports

bool recognition_invariants_hold(const RecognitionReport& r, std::string& why) {
  for (const auto& c : r.cells) {
    const bool in_range = c.rank1 >= 0.0 && c.rank1 <= 1.0 && c.baseline_rank1 >= 0.0 &&
                          c.baseline_rank1 <= 1.0;
    if (!in_range || recount_rank1(c) != c.rank1) {
      why = "cell (" + pose_label(c.model_pose) + ", " + pose_label(c.probe_pose) +
            ") failed the rank-1 recount";
      return false;
    }
  }
  return true;
}

bool histogram_invariants_hold(const HistogramReport& r, std::string& why) {
  auto sum = [](const Histogram& h) {
    return std::accumulate(h.counts.begin(), h.counts.end(), std::size_t{0});
  };
  for (const auto& m : r.models) {
    if (sum(m.intra) != r.intra_pairs || sum(m.inter) != r.inter_pairs) {
      why = "histogram counts of '" + m.label + "' do not sum to the pair counts";
      return false;
    }
  }
  return true;
}

int run_histogram(const HistSettings& h, const RunManifest& run, std::ostream& out,
                  const Logger& log) {
  if (h.bins < 1) throw config_error("histogram.bins must be >= 1");
  if (h.models.empty()) throw config_error("histogram.models must name at least one directory");
  const LoadedData loaded = load_dataset(h.manifest, run.jobs, log);
  const PoseDataset& data = loaded.data;
  const auto& names = data.region_names;
  if (std::find(names.begin(), names.end(), h.region) == names.end()) {
    throw config_error("histogram.region: unknown region '" + h.region + "'");
  }
  const std::vector<double> poses = data.poses();
  double probe = h.gallery_pose;
  if (h.probe_pose) {
    probe = *h.probe_pose;
  } else {
    for (double p : poses) {
      if (p != h.gallery_pose) {
        probe = p;
        break;
      }
    }
  }
  const CoupledDataset test =
      pose_pair_dataset(data, h.gallery_pose, probe, data.region_index(h.region));

  std::vector<std::pair<std::string, PairedSubspaceModel>> models;
  std::map<std::string, std::string> digests;
  for (const auto& dir : h.models) {
    ModelDirectory md(dir, data);
    PairedSubspaceModel m = md.load({h.gallery_pose, probe, h.region});
    std::string label(to_string(m.method));
    int n = 1;
    auto taken = [&](const std::string& l) {
      return std::any_of(models.begin(), models.end(), [&](const auto& e) { return e.first == l; });
    };
    while (taken(n == 1 ? label : label + "_" + std::to_string(n))) ++n;
    if (n > 1) label += "_" + std::to_string(n);
    digests[label] = md.digests().begin()->second;
    models.emplace_back(label, std::move(m));
  }
  const HistogramReport rep = score_histograms(models, test, std::size_t(h.bins));
  std::string why;
  if (!histogram_invariants_hold(rep, why)) throw std::runtime_error(why);

  const json inputs = {{"command", "histogram"},
                       {"gallery_pose", h.gallery_pose},
                       {"probe_pose", probe},
                       {"region", h.region},
                       {"bins", h.bins},
                       {"seed", run.seed},
                       {"test_data", hex(loaded.digest)},
                       {"models", digests}};
  const std::string hash = config_hash(inputs);
  const json doc = {{"schema_version", kReportSchemaVersion},
                    {"kind", "histogram"},
                    {"config_hash", hash},
                    {"inputs", inputs},
                    {"report", to_json(rep)}};
  const fs::path dir = run.out_dir / "reports";
  make_dir(dir);
  write_text(dir / ("histogram_" + hash + ".json"), doc.dump(2) + "\n");
  write_text(dir / ("histogram_" + hash + ".csv"), histogram_csv(rep));

  out << "pairs: " << rep.intra_pairs << " intra, " << rep.inter_pairs << " inter\n";
  if (rep.raw_available) {
    out << "raw       intra mean " << format_number(rep.raw_intra.mean) << " var "
        << format_number(rep.raw_intra.variance) << "  inter mean "
        << format_number(rep.raw_inter.mean) << "  overlap " << format_number(rep.raw_bhattacharyya)
        << "\n";
  }
  for (const auto& m : rep.models) {
    out << m.label << std::string(10 - std::min<std::size_t>(9, m.label.size()), ' ')
        << "intra mean " << format_number(m.intra.mean) << " var "
        << format_number(m.intra.variance) << "  inter mean " << format_number(m.inter.mean)
        << "  overlap " << format_number(m.bhattacharyya) << "\n";
  }
  out << "report -> " << (dir / ("histogram_" + hash + ".json")).string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const Settings& s, std::ostream& out, const Logger& log) {
  const EvalSettings& t = s.eval;
  if (t.protocol == "histograms") {
    HistSettings h = s.hist;
    h.manifest = t.manifest;
    h.models = {t.models};
    h.gallery_pose = t.gallery_pose;
    if (!t.probe_poses.empty()) h.probe_pose = t.probe_poses.front();
    return run_histogram(h, s.run, out, log);
  }
  if (t.protocol != "all-vs-all" && t.protocol != "unknown-pose") {
    throw config_error("evaluate.protocol must be all-vs-all, unknown-pose or histograms (got '" +
                       t.protocol + "')");
  }
  if (t.top_n < 1) throw config_error("evaluate.top_n must be >= 1");
  ProtocolConfig cfg;
  cfg.gallery_pose = t.gallery_pose;
  cfg.probe_poses = t.probe_poses;
  cfg.feature_mode = parse_mode(t.feature_mode, "evaluate.feature_mode");
  cfg.top_n = std::size_t(t.top_n);
  cfg.jobs = s.run.jobs;
  cfg.seed = s.run.seed;

  const LoadedData loaded = load_dataset(t.manifest, s.run.jobs, log);
  ModelDirectory models(t.models, loaded.data);
  ModelStore store(models.source());
  RecognitionReport report = t.protocol == "all-vs-all"
                                 ? run_all_vs_all(cfg, loaded.data, store)
                                 : run_unknown_probe_pose(cfg, loaded.data, store);
  if (!store.models().empty()) {
    const PairedSubspaceModel& m = store.models().begin()->second;
    report.config.method = m.method;
    report.config.alpha = m.alpha;
    report.config.k = m.k_requested;
  }
  std::string why;
  if (!recognition_invariants_hold(report, why)) throw std::runtime_error(why);

  const json inputs = {{"command", "evaluate"},
                       {"protocol", t.protocol},
                       {"config", to_json(report.config)},
                       {"test_data", hex(loaded.digest)},
                       {"models", models.digests()}};
  const std::string hash = config_hash(inputs);
  const json doc = {{"schema_version", kReportSchemaVersion},
                    {"kind", "recognition"},
                    {"config_hash", hash},
                    {"inputs", inputs},
                    {"report", to_json(report)}};
  const fs::path dir = s.run.out_dir / "reports";
  make_dir(dir);
  const std::string corner =
      t.protocol == "all-vs-all" ? "gallery_pose/probe_pose" : "estimated_pose/real_pose";
  write_text(dir / ("report_" + hash + ".json"), doc.dump(2) + "\n");
  write_text(dir / ("rank1_" + hash + ".csv"),
             matrix_csv(corner, report.row_poses, report.col_poses, report.rank1));
  write_text(dir / ("baseline_" + hash + ".csv"),
             matrix_csv(corner, report.row_poses, report.col_poses, report.baseline_rank1));
  if (!report.degradation.empty()) {
    write_text(dir / ("degradation_" + hash + ".csv"), degradation_csv(report.degradation));
  }

  out << t.protocol << " (" << to_string(cfg.feature_mode) << ")\n"
      << matrix_csv(corner, report.row_poses, report.col_poses, report.rank1)
      << "mean rank-1 " << format_number(report.mean_rank1) << ", raw baseline "
      << format_number(report.mean_baseline_rank1) << "\n"
      << "report -> " << (dir / ("report_" + hash + ".json")).string() << "\n";
  return kExitOk;
}

int cmd_inspect(const fs::path& file, std::ostream& out) {
  const auto bytes = slurp(file);
  PairedSubspaceModel m;
  try {
    m = deserialize_model(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), file.string() + ": " + e.what());
  }
  json j = model_summary(m);
  j["file"] = file.filename().string();
  j["fnv1a64"] = hex(fnv1a64(bytes.data(), bytes.size()));
  out << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::Config:
    case Errc::NegativeAlpha:
    case Errc::InvalidSpec:
    case Errc::InvalidParams:
    case Errc::InvalidArgument:
    case Errc::RetainedTooLarge:
    case Errc::SingularCovariance:  // remedy is a larger alpha
      return kExitConfig;
    case Errc::DimensionMismatch:
    case Errc::RegionMismatch:
      return kExitMismatch;
    case Errc::EmptyDataset:
    case Errc::NonFiniteInput:
    case Errc::DegenerateLandmarks:
    case Errc::OutOfBoundsLandmark:
    case Errc::UnknownLandmark:
    case Errc::EmptyScores:
    case Errc::EmptyGallery:
    case Errc::InsufficientSubjects:
    case Errc::Io:
    case Errc::Format:
      return kExitData;
  }
  return kExitFailure;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-pose face matching with coupled subspace models", "corrface"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  auto* o_config = app.add_option("--config", config_path, "JSON config file");
  auto* o_seed = app.add_option("--seed", seed, "master seed (default 0)");
  auto* o_jobs = app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  auto* o_out = app.add_option("--out", out_dir, "output directory (default corrface_run)");
  auto* o_verbose = app.add_flag("-v,--verbose", "progress messages on stderr");

  // synth
  auto* synth = app.add_subcommand("synth", "write synthetic train/test manifests and rasters");
  int sy_train = 0, sy_test = 0, sy_images = 0;
  double sy_occ = 0.0;
  std::vector<double> sy_poses;
  auto* o_sy_train = synth->add_option("--train-subjects", sy_train);
  auto* o_sy_test = synth->add_option("--test-subjects", sy_test);
  auto* o_sy_images = synth->add_option("--images-per-pose", sy_images);
  auto* o_sy_occ = synth->add_option("--occlusion", sy_occ, "occlusion_fraction");
  auto* o_sy_poses = synth->add_option("--poses", sy_poses)->delimiter(',');

  // train
  auto* train = app.add_subcommand("train", "train per-region models for every pose pair");
  std::string tr_manifest, tr_method, tr_mode, tr_pairs;
  double tr_alpha = 0.0, tr_gallery = 0.0;
  long tr_k = 0;
  auto* o_tr_manifest = train->add_option("--manifest", tr_manifest, "training manifest CSV");
  auto* o_tr_method = train->add_option("--method", tr_method, "cca | pls");
  auto* o_tr_alpha = train->add_option("--alpha", tr_alpha, "ridge on the view covariances");
  auto* o_tr_k = train->add_option("--k", tr_k, "basis vectors per model");
  auto* o_tr_mode = train->add_option("--mode", tr_mode, "holistic | local | holistic+local");
  auto* o_tr_pairs = train->add_option("--pairs", tr_pairs, "all | gallery");
  auto* o_tr_gallery = train->add_option("--gallery-pose", tr_gallery);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "run a recognition protocol on test data");
  std::string ev_manifest, ev_models, ev_protocol, ev_mode;
  double ev_gallery = 0.0;
  long ev_top = 0;
  std::vector<double> ev_probes;
  auto* o_ev_manifest = evaluate->add_option("--manifest", ev_manifest, "test manifest CSV");
  auto* o_ev_models = evaluate->add_option("--models", ev_models, "model directory");
  auto* o_ev_protocol =
      evaluate->add_option("--protocol", ev_protocol, "all-vs-all | unknown-pose | histograms");
  auto* o_ev_gallery = evaluate->add_option("--gallery-pose", ev_gallery);
  auto* o_ev_probes = evaluate->add_option("--probe-poses", ev_probes)->delimiter(',');
  auto* o_ev_mode = evaluate->add_option("--mode", ev_mode, "holistic | local | holistic+local");
  auto* o_ev_top = evaluate->add_option("--top-n", ev_top);

  // histogram
  auto* histogram = app.add_subcommand("histogram", "intra/inter-subject score histograms");
  std::string hi_manifest, hi_region;
  std::vector<std::string> hi_models;
  double hi_gallery = 0.0, hi_probe = 0.0;
  long hi_bins = 0;
  auto* o_hi_manifest = histogram->add_option("--manifest", hi_manifest, "test manifest CSV");
  auto* o_hi_models = histogram->add_option("--models", hi_models, "model directories");
  auto* o_hi_gallery = histogram->add_option("--gallery-pose", hi_gallery);
  auto* o_hi_probe = histogram->add_option("--probe-pose", hi_probe);
  auto* o_hi_region = histogram->add_option("--region", hi_region);
  auto* o_hi_bins = histogram->add_option("--bins", hi_bins);

  // inspect-model
  auto* inspect = app.add_subcommand("inspect-model", "print a model file's metadata");
  std::string inspect_path;
  inspect->add_option("model", inspect_path, "model file")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    Settings s;
    if (o_config->count()) {
      s.run.config_path = config_path;
      load_config_file(config_path, s);
    }
    if (o_seed->count()) s.run.seed = seed;
    if (o_jobs->count()) s.run.jobs = jobs;
    if (o_out->count()) s.run.out_dir = out_dir;
    s.run.verbosity = int(o_verbose->count());
    if (s.run.jobs < 1) throw config_error("jobs must be >= 1");

    if (o_sy_train->count()) s.synth.n_train_subjects = sy_train;
    if (o_sy_test->count()) s.synth.n_test_subjects = sy_test;
    if (o_sy_images->count()) s.synth.images_per_pose = sy_images;
    if (o_sy_occ->count()) s.synth.occlusion_fraction = sy_occ;
    if (o_sy_poses->count()) s.synth.poses_deg = sy_poses;

    if (o_tr_manifest->count()) s.train.manifest = tr_manifest;
    if (o_tr_method->count()) s.train.method = tr_method;
    if (o_tr_alpha->count()) s.train.alpha = tr_alpha;
    if (o_tr_k->count()) s.train.k = tr_k;
    if (o_tr_mode->count()) s.train.feature_mode = tr_mode;
    if (o_tr_pairs->count()) s.train.pose_pairs = tr_pairs;
    if (o_tr_gallery->count()) s.train.gallery_pose = tr_gallery;

    if (o_ev_manifest->count()) s.eval.manifest = ev_manifest;
    if (o_ev_models->count()) s.eval.models = ev_models;
    if (o_ev_protocol->count()) s.eval.protocol = ev_protocol;
    if (o_ev_gallery->count()) s.eval.gallery_pose = ev_gallery;
    if (o_ev_probes->count()) s.eval.probe_poses = ev_probes;
    if (o_ev_mode->count()) s.eval.feature_mode = ev_mode;
    if (o_ev_top->count()) s.eval.top_n = ev_top;

    if (o_hi_manifest->count()) s.hist.manifest = hi_manifest;
    if (o_hi_models->count()) s.hist.models.assign(hi_models.begin(), hi_models.end());
    if (o_hi_gallery->count()) s.hist.gallery_pose = hi_gallery;
    if (o_hi_probe->count()) s.hist.probe_pose = hi_probe;
    if (o_hi_region->count()) s.hist.region = hi_region;
    if (o_hi_bins->count()) s.hist.bins = hi_bins;

    // paths not given anywhere default to the run directory layout
    const fs::path& run_dir = s.run.out_dir;
    if (s.train.manifest.empty()) s.train.manifest = run_dir / "train_manifest.csv";
    if (s.eval.manifest.empty()) s.eval.manifest = run_dir / "test_manifest.csv";
    if (s.eval.models.empty()) s.eval.models = run_dir / "models";
    if (s.hist.manifest.empty()) s.hist.manifest = run_dir / "test_manifest.csv";
    if (s.hist.models.empty()) s.hist.models = {run_dir / "models"};

    const Logger log{err, s.run.verbosity};
    if (synth->parsed()) return cmd_synth(s, out, log);
    if (train->parsed()) return cmd_train(s, out, log);
    if (evaluate->parsed()) return cmd_evaluate(s, out, log);
    if (histogram->parsed()) return run_histogram(s.hist, s.run, out, log);
    if (inspect->parsed()) return cmd_inspect(inspect_path, out);
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace corrface::cli
