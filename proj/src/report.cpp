#include "corrface/report.hpp"

#include "corrface/error.hpp"
#include "corrface/model_io.hpp"

#include <cstdio>
#include <fstream>

namespace corrface {

namespace {

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json cell_json(const CellResult& c) {
  nlohmann::json records = nlohmann::json::array();
  std::size_t dropped = 0;
  for (const auto& r : c.records) {
    dropped += r.regions_dropped ? 1 : 0;
    records.push_back({{"subject_id", r.subject_id},
                       {"image_index", r.image_index},
                       {"true_rank", r.true_rank},
                       {"top", r.top},
                       {"top_scores", r.top_scores},
                       {"regions_dropped", r.regions_dropped}});
  }
  return {{"gallery_pose", c.gallery_pose},
          {"model_pose", c.model_pose},
          {"probe_pose", c.probe_pose},
          {"probes", c.probes},
          {"correct", c.correct},
          {"rank1", c.rank1},
          {"baseline_rank1", c.baseline_rank1},
          {"region_rank1", c.region_rank1},
          {"probes_with_dropped_regions", dropped},
          {"records", std::move(records)}};
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

nlohmann::json to_json(const ProtocolConfig& c) {
  nlohmann::json j = {{"gallery_pose", c.gallery_pose},
                      {"probe_poses", c.probe_poses},
                      {"feature_mode", std::string(to_string(c.feature_mode))},
                      {"method", std::string(to_string(c.method))},
                      {"alpha", c.alpha},
                      {"k", c.k},
                      {"top_n", c.top_n},
                      {"seed", c.seed}};
  j["pca_retained"] = c.pca_retained ? nlohmann::json(*c.pca_retained) : nlohmann::json();
  return j;
}

nlohmann::json to_json(const RecognitionReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) cells.push_back(cell_json(c));
  nlohmann::json degradation = nlohmann::json::array();
  for (const auto& d : r.degradation) {
    degradation.push_back(
        {{"pose_gap", d.pose_gap}, {"mean_rank1", d.mean_rank1}, {"cells", d.cells}});
  }
  return {{"protocol", r.protocol},
          {"config", to_json(r.config)},
          {"row_poses", r.row_poses},
          {"col_poses", r.col_poses},
          {"rank1", matrix_json(r.rank1)},
          {"baseline_rank1", matrix_json(r.baseline_rank1)},
          {"mean_rank1", r.mean_rank1},
          {"mean_baseline_rank1", r.mean_baseline_rank1},
          {"degradation", std::move(degradation)},
          {"cells", std::move(cells)}};
}

nlohmann::json to_json(const Histogram& h) {
  return {{"lo", h.lo},         {"hi", h.hi},           {"counts", h.counts},
          {"total", h.total},   {"mean", h.mean},       {"variance", h.variance}};
}

nlohmann::json to_json(const HistogramReport& r) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : r.models) {
    models.push_back({{"label", m.label},
                      {"method", std::string(to_string(m.method))},
                      {"intra", to_json(m.intra)},
                      {"inter", to_json(m.inter)},
                      {"intra_variance", m.intra.variance},
                      {"bhattacharyya", m.bhattacharyya}});
  }
  nlohmann::json j = {{"bins", r.bins},
                      {"intra_pairs", r.intra_pairs},
                      {"inter_pairs", r.inter_pairs},
                      {"raw_available", r.raw_available},
                      {"models", std::move(models)}};
  if (r.raw_available) {
    j["raw"] = {{"intra", to_json(r.raw_intra)},
                {"inter", to_json(r.raw_inter)},
                {"bhattacharyya", r.raw_bhattacharyya}};
  }
  return j;
}

nlohmann::json model_summary(const PairedSubspaceModel& m) {
  std::vector<double> rho(m.rho.data(), m.rho.data() + m.rho.size());
  return {{"method", std::string(to_string(m.method))},
          {"region", m.region},
          {"alpha", m.alpha},
          {"k", m.k()},
          {"k_requested", m.k_requested},
          {"k_clamped", m.k_clamped},
          {"x_dim", m.x_dim()},
          {"y_dim", m.y_dim()},
          {"ties", m.ties},
          {"rho", rho}};
}

std::string matrix_csv(const std::string& corner, const std::vector<double>& rows,
                       const std::vector<double>& cols, const Matrix& m) {
  std::string out = corner;
  for (double c : cols) out += "," + format_number(c);
  out += "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out += format_number(rows[r]);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out += "," + format_number(m(Index(r), Index(c)));
    }
    out += "\n";
  }
  return out;
}

std::string degradation_csv(const std::vector<DegradationPoint>& points) {
  std::string out = "pose_gap,mean_rank1,cells\n";
  for (const auto& p : points) {
    out += format_number(p.pose_gap) + "," + format_number(p.mean_rank1) + "," +
           std::to_string(p.cells) + "\n";
  }
  return out;
}

std::string histogram_csv(const HistogramReport& r) {
  std::string out = "bin_lo,bin_hi";
  if (r.raw_available) out += ",raw_intra,raw_inter";
  for (const auto& m : r.models) out += "," + m.label + "_intra," + m.label + "_inter";
  out += "\n";
  const double width = 2.0 / double(r.bins);
  for (std::size_t b = 0; b < r.bins; ++b) {
    out += format_number(-1.0 + width * double(b)) + "," +
           format_number(-1.0 + width * double(b + 1));
    if (r.raw_available) {
      out += "," + std::to_string(r.raw_intra.counts[b]) + "," +
             std::to_string(r.raw_inter.counts[b]);
    }
    for (const auto& m : r.models) {
      out += "," + std::to_string(m.intra.counts[b]) + "," + std::to_string(m.inter.counts[b]);
    }
    out += "\n";
  }
  return out;
}

std::string config_hash(const nlohmann::json& canonical) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical.dump())));
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
}

}  // namespace corrface
