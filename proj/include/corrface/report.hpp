#pragma once

// JSON and CSV renderings of evaluation results. Everything here is a pure
// function of its inputs so reruns produce identical bytes.

#include "corrface/eval.hpp"
#include "corrface/subspace.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace corrface {

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const ProtocolConfig& config);
nlohmann::json to_json(const RecognitionReport& report);
nlohmann::json to_json(const Histogram& h);
nlohmann::json to_json(const HistogramReport& report);
// Metadata and spectrum summary; no basis matrices.
nlohmann::json model_summary(const PairedSubspaceModel& model);

// Rows labelled by `rows`, columns by `cols`; `corner` names the header cell.
std::string matrix_csv(const std::string& corner, const std::vector<double>& rows,
                       const std::vector<double>& cols, const Matrix& m);
std::string degradation_csv(const std::vector<DegradationPoint>& points);
std::string histogram_csv(const HistogramReport& report);

// 16 hex digits of FNV-1a over the compact dump (keys are sorted by the
// json object type, so the dump is canonical).
std::string config_hash(const nlohmann::json& canonical);

std::string format_number(double v);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace corrface
