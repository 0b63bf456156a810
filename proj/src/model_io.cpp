#include "corrface/model_io.hpp"

#include "corrface/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace corrface {

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size,
                      std::uint64_t seed) {
  std::uint64_t hash = seed;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= data[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t fnv1a64(const std::string& text) {
  return fnv1a64(reinterpret_cast<const std::uint8_t*>(text.data()),
                 text.size());
}

namespace {

constexpr char kMagic[4] = {'C', 'F', 'R', 'M'};

class Writer {
 public:
  void bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + size);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  void le(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::size_t limit)
      : bytes_(bytes), limit_(limit) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string text(std::size_t size) {
    need(size);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), size);
    pos_ += size;
    return s;
  }

  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t size) {
    if (size > limit_ || pos_ > limit_ - size) {
      throw Error(Errc::Format, "model file truncated");
    }
  }
  std::uint64_t le(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

std::uint8_t method_code(Method m) {
  switch (m) {
    case Method::CCA: return 0;
    case Method::PLS: return 1;
    case Method::PCA: return 2;
  }
  return 0;
}

Method method_from_code(std::uint8_t code) {
  switch (code) {
    case 0: return Method::CCA;
    case 1: return Method::PLS;
    case 2: return Method::PCA;
    default: break;
  }
  throw Error(Errc::Format, "unknown method code " + std::to_string(code));
}

void write_row_major(Writer& w, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
  }
}

Matrix read_row_major(Reader& r, Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = r.f64();
  }
  return m;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const PairedSubspaceModel& model) {
  const Index k = model.k();
  if (model.w_x.cols() != k || model.x_mean.size() != model.w_x.rows() ||
      model.w_y.cols() != (model.method == Method::PCA ? 0 : k)) {
    throw Error(Errc::DimensionMismatch, "model fields have inconsistent shapes");
  }
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kModelFormatVersion);
  w.u8(method_code(model.method));
  w.u8(model.k_clamped ? 1 : 0);
  w.u16(0);
  w.f64(model.alpha);
  w.u64(static_cast<std::uint64_t>(k));
  w.u64(static_cast<std::uint64_t>(model.k_requested));
  w.u64(static_cast<std::uint64_t>(model.w_x.rows()));
  w.u64(static_cast<std::uint64_t>(model.w_y.rows()));
  w.u32(static_cast<std::uint32_t>(model.region.size()));
  w.bytes(model.region.data(), model.region.size());
  w.u32(static_cast<std::uint32_t>(model.ties.size()));
  for (Index t : model.ties) w.u64(static_cast<std::uint64_t>(t));
  for (Index i = 0; i < k; ++i) w.f64(model.rho(i));
  for (Index i = 0; i < model.x_mean.size(); ++i) w.f64(model.x_mean(i));
  for (Index i = 0; i < model.y_mean.size(); ++i) w.f64(model.y_mean(i));
  write_row_major(w, model.w_x);
  write_row_major(w, model.w_y);
  auto& buf = w.buffer();
  const std::uint64_t checksum = fnv1a64(buf.data(), buf.size());
  w.u64(checksum);
  return std::move(buf);
}

PairedSubspaceModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 + 4 + sizeof(kMagic)) {
    throw Error(Errc::Format, "model file too short");
  }
  const std::size_t body = bytes.size() - 8;
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(Errc::Format, "not a model file (bad magic)");
  }
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) stored |= std::uint64_t{bytes[body + i]} << (8 * i);
  if (stored != fnv1a64(bytes.data(), body)) {
    throw Error(Errc::Format, "model checksum mismatch");
  }

  Reader r(bytes, body);
  r.text(sizeof(kMagic));
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw Error(Errc::Format, "unsupported model version " + std::to_string(version));
  }
  PairedSubspaceModel model;
  model.method = method_from_code(r.u8());
  model.k_clamped = r.u8() != 0;
  r.u16();
  model.alpha = r.f64();
  const auto k = static_cast<Index>(r.u64());
  model.k_requested = static_cast<Index>(r.u64());
  const auto dx = static_cast<Index>(r.u64());
  const auto dy = static_cast<Index>(r.u64());
  // Guard against absurd sizes before allocating.
  const Index dy_used = model.method == Method::PCA ? 0 : dy;
  if (k < 0 || dx < 0 || dy < 0 ||
      static_cast<std::size_t>(k) * (1 + dx + dy_used) +
              static_cast<std::size_t>(dx + dy_used) >
          body / 8) {
    throw Error(Errc::Format, "model header dimensions inconsistent with size");
  }
  model.region = r.text(r.u32());
  const std::uint32_t ties = r.u32();
  for (std::uint32_t i = 0; i < ties; ++i) model.ties.push_back(static_cast<Index>(r.u64()));
  model.rho.resize(k);
  for (Index i = 0; i < k; ++i) model.rho(i) = r.f64();
  model.x_mean.resize(dx);
  for (Index i = 0; i < dx; ++i) model.x_mean(i) = r.f64();
  model.y_mean.resize(dy_used);
  for (Index i = 0; i < dy_used; ++i) model.y_mean(i) = r.f64();
  model.w_x = read_row_major(r, dx, k);
  model.w_y = read_row_major(r, dy, model.method == Method::PCA ? 0 : k);
  if (r.position() != body) {
    throw Error(Errc::Format, "trailing bytes in model file");
  }
  return model;
}

void save_model(const PairedSubspaceModel& model,
                const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "failed writing " + path.string());
}

PairedSubspaceModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace corrface
