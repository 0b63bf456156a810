#include "corrface/manifest.hpp"

#include "corrface/error.hpp"
#include "corrface/image.hpp"
#include "corrface/parallel.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace corrface {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(Errc::Format, where + ": '" + s + "' is not a number");
  }
  return v;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<ManifestRecord> parse_manifest(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::Format, source + " is empty");
  const std::vector<std::string> header = split(line);
  std::array<std::size_t, kManifestColumns.size()> col{};
  for (std::size_t c = 0; c < kManifestColumns.size(); ++c) {
    std::size_t i = 0;
    while (i < header.size() && header[i] != kManifestColumns[c]) ++i;
    if (i == header.size()) {
      throw Error(Errc::Format,
                  source + " is missing column '" + std::string(kManifestColumns[c]) + "'");
    }
    col[c] = i;
  }

  std::vector<ManifestRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split(line);
    const std::string where = source + " line " + std::to_string(line_no);
    if (f.size() < header.size()) {
      throw Error(Errc::Format, where + ": expected " + std::to_string(header.size()) +
                                    " fields, got " + std::to_string(f.size()));
    }
    ManifestRecord r;
    r.image_path = f[col[0]];
    r.subject_id = f[col[1]];
    if (r.image_path.empty() || r.subject_id.empty()) {
      throw Error(Errc::Format, where + ": empty image_path or subject_id");
    }
    r.pose_deg = parse_double(f[col[2]], where);
    for (std::size_t l = 0; l < 5; ++l) {
      r.landmarks.points[l] = {parse_double(f[col[3 + 2 * l]], where),
                               parse_double(f[col[4 + 2 * l]], where)};
    }
    out.push_back(std::move(r));
  }
  if (out.empty()) throw Error(Errc::EmptyDataset, source + " has no records");
  return out;
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open manifest " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_manifest(text.str(), path.string());
}

std::string format_manifest(const std::vector<ManifestRecord>& records) {
  std::string out;
  for (std::size_t c = 0; c < kManifestColumns.size(); ++c) {
    if (c) out += ",";
    out += kManifestColumns[c];
  }
  out += "\n";
  for (const auto& r : records) {
    out += r.image_path + "," + r.subject_id + "," + num(r.pose_deg);
    for (const auto& p : r.landmarks.points) out += "," + num(p.x) + "," + num(p.y);
    out += "\n";
  }
  return out;
}

std::vector<FaceSample> load_samples(const std::vector<ManifestRecord>& records,
                                     const std::filesystem::path& base_dir, int jobs) {
  std::vector<FaceSample> out(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    const ManifestRecord& r = records[i];
    std::filesystem::path p(r.image_path);
    if (p.is_relative()) p = base_dir / p;
    out[i].image = read_image(p);
    out[i].landmarks = r.landmarks;
    out[i].subject_id = r.subject_id;
    out[i].pose_deg = r.pose_deg;
  });
  return out;
}

}  // namespace corrface
