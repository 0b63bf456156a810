#pragma once

#include "corrface/image.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace corrface {

enum class Landmark { LeftEye, RightEye, NoseTip, LeftMouth, RightMouth };

inline constexpr std::array<Landmark, 5> kLandmarks = {
    Landmark::LeftEye, Landmark::RightEye, Landmark::NoseTip,
    Landmark::LeftMouth, Landmark::RightMouth};

std::string_view landmark_name(Landmark landmark);
// Throws UnknownLandmark.
Landmark landmark_from_name(std::string_view name);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Landmarks {
  std::array<Point, 5> points{};

  Point& operator[](Landmark l) { return points[static_cast<std::size_t>(l)]; }
  const Point& operator[](Landmark l) const {
    return points[static_cast<std::size_t>(l)];
  }
  Point eye_midpoint() const;
  Point mouth_center() const;
};

struct FaceSample {
  Image image;
  Landmarks landmarks;
  std::string subject_id;
  double pose_deg = 0.0;
};

// Source -> canvas map q = [a -b; b a] p + t (rotation + uniform scale + shift).
struct SimilarityTransform {
  double a = 1.0;
  double b = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  Point apply(Point p) const;
  Point invert(Point q) const;
  double scale() const;
  double angle() const;
};

inline constexpr int kCanvasWidth = 204;
inline constexpr int kCanvasHeight = 256;
inline constexpr Point kEyeAnchor{102.0, 96.0};
inline constexpr Point kMouthAnchor{102.0, 176.0};

struct NormalizedFace {
  Image canvas;
  Landmarks mapped_landmarks;
  SimilarityTransform transform;
};

// Similarity taking eye_mid to kEyeAnchor and mouth_center to kMouthAnchor.
SimilarityTransform canonical_transform(Point eye_mid, Point mouth_center);

// Throws DegenerateLandmarks or OutOfBoundsLandmark.
NormalizedFace normalize_face(const FaceSample& sample);

struct GaborParams {
  double k_max = std::numbers::pi / 2.0;
  double f = std::numbers::sqrt2;
  double sigma = 2.0 * std::numbers::pi;
  int radius = 15;
  int scales = 5;
  int orientations = 8;
};

struct GaborKernel {
  int scale = 0;
  int orientation = 0;
  Eigen::Vector2d wave;  // (k_x, k_y) in pixel units
  int radius = 0;
  // (2r+1)^2 taps, row-major in (dy, dx), tap(dx, dy) at (dy+r)*(2r+1)+(dx+r).
  std::vector<std::complex<double>> taps;

  int side() const { return 2 * radius + 1; }
  std::complex<double> tap(int dx, int dy) const {
    return taps[static_cast<std::size_t>((dy + radius) * side() + (dx + radius))];
  }
};

Eigen::Vector2d gabor_wave_vector(const GaborParams& params, int scale,
                                  int orientation);

// One kernel; orientation may lie outside [0, orientations) (e.g. mu + 8 gives
// the antipodal wave vector).
GaborKernel make_gabor_kernel(const GaborParams& params, int scale, int orientation);

class GaborBank {
 public:
  GaborBank(GaborParams params, std::vector<GaborKernel> kernels)
      : params_(params), kernels_(std::move(kernels)) {}

  const GaborParams& params() const { return params_; }
  const std::vector<GaborKernel>& kernels() const { return kernels_; }
  std::size_t size() const { return kernels_.size(); }
  const GaborKernel& kernel(int scale, int orientation) const {
    return kernels_[static_cast<std::size_t>(scale * params_.orientations + orientation)];
  }

 private:
  GaborParams params_;
  std::vector<GaborKernel> kernels_;
};

// Throws InvalidParams for sigma <= 0, f <= 1, k_max <= 0, radius < 1 or an
// empty bank. Kernels are ordered scale-major.
GaborBank build_gabor_bank(const GaborParams& params = {});

// Convolution response at one pixel; the image is zero outside its bounds.
std::complex<double> gabor_response(const Image& image, const GaborKernel& kernel,
                                    int x, int y);

enum class FeatureLayout { Holistic2520, LocalGabor1960 };

inline constexpr int kHolisticWidth = 45;
inline constexpr int kHolisticHeight = 56;
inline constexpr int kHolisticLength = kHolisticWidth * kHolisticHeight;
inline constexpr int kGaborWindow = 31;
inline constexpr int kGaborStride = 5;
inline constexpr int kGaborGrid = 7;
inline constexpr int kLocalGaborLength = kGaborGrid * kGaborGrid * 40;

struct FeatureVector {
  Eigen::VectorXd values;
  FeatureLayout layout = FeatureLayout::Holistic2520;
  std::string origin;
  // The landmark window had to be shifted to stay inside the canvas.
  bool clamped = false;
};

// Box-filter (area-average) resize with fractional pixel coverage.
Image resize_area(const Image& image, int width, int height);

FeatureVector extract_holistic(const NormalizedFace& face);

// 31x31 window centred on the landmark, responses subsampled at stride 5;
// blocks of 49 magnitudes ordered scale-major, then orientation.
FeatureVector extract_local_gabor(const NormalizedFace& face, const GaborBank& bank,
                                  Landmark landmark);
FeatureVector extract_local_gabor(const NormalizedFace& face, const GaborBank& bank,
                                  std::string_view landmark);

}  // namespace corrface
