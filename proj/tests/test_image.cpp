#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "corrface/error.hpp"
#include "corrface/image.hpp"

#include <filesystem>
#include <fstream>

using namespace corrface;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "corrface_test_image";
  fs::create_directories(dir);
  return dir / name;
}

Image gradient(int w, int h) {
  Image img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = ((x * 7 + y * 13) % 256) / 255.0;
  return img;
}

}  // namespace

TEST_CASE("bilinear sampling hits pixel centres and blends between them") {
  Image img(2, 2);
  img.at(0, 0) = 0.0;
  img.at(1, 0) = 1.0;
  img.at(0, 1) = 0.5;
  img.at(1, 1) = 0.25;
  CHECK(img.sample_bilinear(1.0, 0.0) == doctest::Approx(1.0));
  CHECK(img.sample_bilinear(0.5, 0.0) == doctest::Approx(0.5));
  CHECK(img.sample_bilinear(0.5, 0.5) == doctest::Approx((0.0 + 1.0 + 0.5 + 0.25) / 4));
  // outside pixels count as zero
  CHECK(img.sample_bilinear(-0.5, 0.0) == doctest::Approx(0.0));
  CHECK(img.sample_bilinear(1.5, 0.0) == doctest::Approx(0.5));
  CHECK(img.sample_bilinear(10.0, 10.0) == 0.0);
  CHECK(img.sample_bilinear(-3.0, 0.0) == 0.0);
}

TEST_CASE("PGM binary round trip") {
  const Image img = gradient(17, 9);
  const auto path = scratch("g.pgm");
  write_pgm(img, path);
  const Image back = read_image(path);
  REQUIRE(back.width() == 17);
  REQUIRE(back.height() == 9);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 17; ++x) CHECK(back.at(x, y) == doctest::Approx(img.at(x, y)));
}

TEST_CASE("ASCII PGM with comments") {
  const auto path = scratch("a.pgm");
  {
    std::ofstream out(path);
    out << "P2\n# a comment\n3 2\n# another\n10\n0 5 10\n10 5 0\n";
  }
  const Image img = read_image(path);
  REQUIRE(img.width() == 3);
  CHECK(img.at(1, 0) == doctest::Approx(0.5));
  CHECK(img.at(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("PNG round trip") {
  const Image img = gradient(23, 11);
  const auto path = scratch("g.png");
  write_png(img, path);
  const Image back = read_image(path);
  REQUIRE(back.width() == 23);
  REQUIRE(back.height() == 11);
  CHECK(back.to_bytes() == img.to_bytes());
}

TEST_CASE("image read errors") {
  CHECK_THROWS_AS(read_image(scratch("does_not_exist.pgm")), Error);
  const auto bad = scratch("bad.pgm");
  {
    std::ofstream out(bad);
    out << "P6\n2 2\n255\nxxxxxxxxxxxx";
  }
  try {
    read_image(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Format);
  }
  const auto truncated = scratch("trunc.pgm");
  {
    std::ofstream out(truncated, std::ios::binary);
    out << "P5\n4 4\n255\nab";
  }
  CHECK_THROWS_AS(read_image(truncated), Error);
  const auto deep = scratch("deep.pgm");
  {
    std::ofstream out(deep);
    out << "P2\n1 1\n65535\n7\n";
  }
  CHECK_THROWS_AS(read_image(deep), Error);
}
