#include "corrface/image.hpp"

#include "corrface/error.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

namespace corrface {

Image::Image(int width, int height, double fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw Error(Errc::InvalidArgument, "image dimensions must be non-negative");
  }
  pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                 fill);
}

double Image::sample_bilinear(double x, double y) const {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  if (fx < -1.0 || fy < -1.0 || fx >= width_ || fy >= height_) return 0.0;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double tx = x - fx;
  const double ty = y - fy;
  const double top = (1.0 - tx) * value_or_zero(x0, y0) + tx * value_or_zero(x0 + 1, y0);
  const double bottom =
      (1.0 - tx) * value_or_zero(x0, y0 + 1) + tx * value_or_zero(x0 + 1, y0 + 1);
  return (1.0 - ty) * top + ty * bottom;
}

Image Image::from_bytes(int width, int height, std::span<const std::uint8_t> bytes) {
  Image img(width, height);
  if (bytes.size() != img.pixels_.size()) {
    throw Error(Errc::Format, "pixel buffer size does not match dimensions");
  }
  std::transform(bytes.begin(), bytes.end(), img.pixels_.begin(),
                 [](std::uint8_t v) { return v / 255.0; });
  return img;
}

std::vector<std::uint8_t> Image::to_bytes() const {
  std::vector<std::uint8_t> out(pixels_.size());
  std::transform(pixels_.begin(), pixels_.end(), out.begin(), [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  });
  return out;
}

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open image " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Header tokens of a PNM file, skipping whitespace and '#' comments.
class PnmTokens {
 public:
  explicit PnmTokens(const std::vector<std::uint8_t>& data) : data_(data) {}

  std::string next() {
    skip();
    std::string token;
    while (pos_ < data_.size() && !std::isspace(data_[pos_])) {
      token.push_back(static_cast<char>(data_[pos_++]));
    }
    if (token.empty()) throw Error(Errc::Format, "truncated PGM header");
    return token;
  }

  int next_int() {
    const std::string t = next();
    try {
      return std::stoi(t);
    } catch (const std::exception&) {
      throw Error(Errc::Format, "bad PGM header value '" + t + "'");
    }
  }

  std::size_t position() const { return pos_; }
  void consume_one() { ++pos_; }

 private:
  void skip() {
    while (pos_ < data_.size()) {
      if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else if (std::isspace(data_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& data_;
  std::size_t pos_ = 0;
};

Image read_pgm(const std::vector<std::uint8_t>& data, const std::string& name) {
  PnmTokens tokens(data);
  const std::string magic = tokens.next();
  if (magic != "P5" && magic != "P2") {
    throw Error(Errc::Format, name + ": not a grayscale PGM");
  }
  const int width = tokens.next_int();
  const int height = tokens.next_int();
  const int maxval = tokens.next_int();
  if (width <= 0 || height <= 0) throw Error(Errc::Format, name + ": empty PGM");
  if (maxval <= 0 || maxval > 255) {
    throw Error(Errc::Format, name + ": only 8-bit PGM is supported");
  }
  Image img(width, height);
  auto px = img.pixels();
  if (magic == "P5") {
    tokens.consume_one();
    const std::size_t start = tokens.position();
    if (data.size() < start + px.size()) {
      throw Error(Errc::Format, name + ": truncated PGM raster");
    }
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = data[start + i] / double(maxval);
  } else {
    for (auto& v : px) v = tokens.next_int() / double(maxval);
  }
  return img;
}

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw Error(Errc::Format, path.string() + ": " + png.message);
  }
  if ((png.format & PNG_FORMAT_FLAG_COLOR) != 0) {
    png_image_free(&png);
    throw Error(Errc::Format, path.string() + ": only grayscale PNG is supported");
  }
  png.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(Errc::Format, path.string() + ": " + msg);
  }
  return Image::from_bytes(static_cast<int>(png.width), static_cast<int>(png.height),
                           buffer);
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  const auto data = slurp(path);
  static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (data.size() >= 8 && std::equal(kPngSig, kPngSig + 8, data.begin())) {
    return read_png(path);
  }
  return read_pgm(data, path.string());
}

void write_pgm(const Image& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  const auto bytes = image.to_bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "failed writing " + path.string());
}

void write_png(const Image& image, const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_GRAY;
  const auto bytes = image.to_bytes();
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw Error(Errc::Io, "cannot write " + path.string() + ": " + png.message);
  }
}

}  // namespace corrface
