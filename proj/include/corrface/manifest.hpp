#pragma once

// CSV dataset manifest: one row per image, header required.
//
//   image_path,subject_id,pose_deg,lx_eye,ly_eye,rx_eye,ry_eye,x_nose,y_nose,
//   lx_mouth,ly_mouth,rx_mouth,ry_mouth
//
// Coordinates are source-image pixels, origin top-left. Relative image paths
// resolve against the manifest's directory. Extra columns are ignored.

#include "corrface/features.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace corrface {

inline constexpr std::array<std::string_view, 13> kManifestColumns = {
    "image_path", "subject_id", "pose_deg", "lx_eye",   "ly_eye",   "rx_eye",  "ry_eye",
    "x_nose",     "y_nose",     "lx_mouth", "ly_mouth", "rx_mouth", "ry_mouth"};

struct ManifestRecord {
  std::string image_path;
  std::string subject_id;
  double pose_deg = 0.0;
  Landmarks landmarks;
};

// Throws Format naming the missing column, or the file and line of a bad row.
std::vector<ManifestRecord> parse_manifest(std::string_view text,
                                           const std::string& source = "manifest");
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);

std::string format_manifest(const std::vector<ManifestRecord>& records);

// Loads every image of a manifest; Io/Format errors name the file.
std::vector<FaceSample> load_samples(const std::vector<ManifestRecord>& records,
                                     const std::filesystem::path& base_dir, int jobs = 1);

}  // namespace corrface
