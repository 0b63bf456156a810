#include "corrface/features.hpp"

#include "corrface/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace corrface {

namespace {

constexpr std::array<std::string_view, 5> kLandmarkNames = {
    "left-eye-center", "right-eye-center", "nose-tip", "left-mouth-corner",
    "right-mouth-corner"};

using Cplx = std::complex<double>;

Cplx as_complex(Point p) { return {p.x, p.y}; }
Point as_point(Cplx c) { return {c.real(), c.imag()}; }

bool inside(const Image& img, Point p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.y >= 0.0 &&
         p.x <= img.width() - 1.0 && p.y <= img.height() - 1.0;
}

// Overlap weights of an area-average resize along one axis (dst x src).
Eigen::MatrixXd area_weights(int src, int dst) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(dst, src);
  const double step = static_cast<double>(src) / dst;
  for (int o = 0; o < dst; ++o) {
    const double lo = o * step;
    const double hi = (o + 1) * step;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
    for (int i = first; i <= last; ++i) {
      const double overlap = std::min(hi, i + 1.0) - std::max(lo, double(i));
      if (overlap > 0.0) w(o, i) = overlap / step;
    }
  }
  return w;
}

}  // namespace

std::string_view landmark_name(Landmark landmark) {
  return kLandmarkNames[static_cast<std::size_t>(landmark)];
}

Landmark landmark_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kLandmarkNames.size(); ++i) {
    if (kLandmarkNames[i] == name) return kLandmarks[i];
  }
  throw Error(Errc::UnknownLandmark, "unknown landmark '" + std::string(name) + "'");
}

Point Landmarks::eye_midpoint() const {
  const Point& l = (*this)[Landmark::LeftEye];
  const Point& r = (*this)[Landmark::RightEye];
  return {(l.x + r.x) / 2.0, (l.y + r.y) / 2.0};
}

Point Landmarks::mouth_center() const {
  const Point& l = (*this)[Landmark::LeftMouth];
  const Point& r = (*this)[Landmark::RightMouth];
  return {(l.x + r.x) / 2.0, (l.y + r.y) / 2.0};
}

Point SimilarityTransform::apply(Point p) const {
  return {a * p.x - b * p.y + tx, b * p.x + a * p.y + ty};
}

Point SimilarityTransform::invert(Point q) const {
  return as_point((as_complex(q) - Cplx(tx, ty)) / Cplx(a, b));
}

double SimilarityTransform::scale() const { return std::hypot(a, b); }
double SimilarityTransform::angle() const { return std::atan2(b, a); }

SimilarityTransform canonical_transform(Point eye_mid, Point mouth_center) {
  const Cplx e = as_complex(eye_mid);
  const Cplx v = as_complex(mouth_center) - e;
  if (std::abs(v) < 1e-9) {
    throw Error(Errc::DegenerateLandmarks, "eye midpoint coincides with mouth center");
  }
  // canvas = z * source + t, with z taking the eye->mouth vector to (0, 80).
  const Cplx z = (as_complex(kMouthAnchor) - as_complex(kEyeAnchor)) / v;
  const Cplx t = as_complex(kEyeAnchor) - z * e;
  return {z.real(), z.imag(), t.real(), t.imag()};
}

NormalizedFace normalize_face(const FaceSample& sample) {
  const Image& src = sample.image;
  if (src.empty()) throw Error(Errc::OutOfBoundsLandmark, "empty source image");
  for (Landmark l : kLandmarks) {
    if (!inside(src, sample.landmarks[l])) {
      throw Error(Errc::OutOfBoundsLandmark,
                  std::string(landmark_name(l)) + " lies outside the source image");
    }
  }
  const Point le = sample.landmarks[Landmark::LeftEye];
  const Point re = sample.landmarks[Landmark::RightEye];
  if (std::hypot(le.x - re.x, le.y - re.y) < 1e-9) {
    throw Error(Errc::DegenerateLandmarks, "eye centers coincide");
  }

  NormalizedFace out;
  out.transform = canonical_transform(sample.landmarks.eye_midpoint(),
                                      sample.landmarks.mouth_center());
  out.canvas = Image(kCanvasWidth, kCanvasHeight);
  for (int y = 0; y < kCanvasHeight; ++y) {
    for (int x = 0; x < kCanvasWidth; ++x) {
      const Point p = out.transform.invert({double(x), double(y)});
      out.canvas.at(x, y) = src.sample_bilinear(p.x, p.y);
    }
  }
  for (Landmark l : kLandmarks) {
    out.mapped_landmarks[l] = out.transform.apply(sample.landmarks[l]);
  }
  return out;
}

Eigen::Vector2d gabor_wave_vector(const GaborParams& params, int scale,
                                  int orientation) {
  const double mag = params.k_max / std::pow(params.f, scale);
  const double phi = std::numbers::pi * orientation / params.orientations;
  return {mag * std::cos(phi), mag * std::sin(phi)};
}

GaborKernel make_gabor_kernel(const GaborParams& params, int scale, int orientation) {
  GaborKernel kern;
  kern.scale = scale;
  kern.orientation = orientation;
  kern.radius = params.radius;
  kern.wave = gabor_wave_vector(params, scale, orientation);
  const double k2 = kern.wave.squaredNorm();
  const double s2 = params.sigma * params.sigma;
  const int r = params.radius;
  const int side = kern.side();

  std::vector<double> envelope(static_cast<std::size_t>(side * side));
  std::vector<Cplx> carrier(envelope.size());
  Cplx wave_sum = 0.0;
  double env_sum = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const std::size_t i = static_cast<std::size_t>((dy + r) * side + (dx + r));
      envelope[i] = (k2 / s2) * std::exp(-k2 * (dx * dx + dy * dy) / (2.0 * s2));
      carrier[i] = std::polar(1.0, kern.wave.x() * dx + kern.wave.y() * dy);
      wave_sum += envelope[i] * carrier[i];
      env_sum += envelope[i];
    }
  }
  // DC offset chosen on the sampled window so the taps sum to zero exactly;
  // the closed-form exp(-sigma^2/2) only cancels for an untruncated kernel.
  const Cplx dc = wave_sum / env_sum;
  kern.taps.resize(envelope.size());
  for (std::size_t i = 0; i < envelope.size(); ++i) {
    kern.taps[i] = envelope[i] * (carrier[i] - dc);
  }
  return kern;
}

GaborBank build_gabor_bank(const GaborParams& params) {
  if (!(params.sigma > 0.0) || !std::isfinite(params.sigma)) {
    throw Error(Errc::InvalidParams, "gabor sigma must be positive");
  }
  if (!(params.f > 1.0) || !std::isfinite(params.f)) {
    throw Error(Errc::InvalidParams, "gabor spacing factor f must exceed 1");
  }
  if (!(params.k_max > 0.0) || !std::isfinite(params.k_max)) {
    throw Error(Errc::InvalidParams, "gabor k_max must be positive");
  }
  if (params.radius < 1 || params.scales < 1 || params.orientations < 1) {
    throw Error(Errc::InvalidParams, "gabor radius, scales and orientations must be >= 1");
  }
  std::vector<GaborKernel> kernels;
  kernels.reserve(static_cast<std::size_t>(params.scales * params.orientations));
  for (int nu = 0; nu < params.scales; ++nu) {
    for (int mu = 0; mu < params.orientations; ++mu) {
      kernels.push_back(make_gabor_kernel(params, nu, mu));
    }
  }
  return GaborBank(params, std::move(kernels));
}

std::complex<double> gabor_response(const Image& image, const GaborKernel& kernel,
                                    int x, int y) {
  const int r = kernel.radius;
  const bool interior =
      x - r >= 0 && y - r >= 0 && x + r < image.width() && y + r < image.height();
  Cplx acc = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double v = interior ? image.at(x - dx, y - dy)
                                : image.value_or_zero(x - dx, y - dy);
      acc += kernel.tap(dx, dy) * v;
    }
  }
  return acc;
}

Image resize_area(const Image& image, int width, int height) {
  if (image.empty() || width <= 0 || height <= 0) {
    throw Error(Errc::InvalidArgument, "resize needs a non-empty image and target");
  }
  const Eigen::MatrixXd wx = area_weights(image.width(), width);
  const Eigen::MatrixXd wy = area_weights(image.height(), height);
  const auto px = image.pixels();
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
      src(px.data(), image.height(), image.width());
  const Eigen::MatrixXd dst = wy * src * wx.transpose();
  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.at(x, y) = dst(y, x);
  }
  return out;
}

FeatureVector extract_holistic(const NormalizedFace& face) {
  const Image small = resize_area(face.canvas, kHolisticWidth, kHolisticHeight);
  FeatureVector fv;
  fv.layout = FeatureLayout::Holistic2520;
  fv.origin = "holistic";
  const auto px = small.pixels();
  fv.values = Eigen::Map<const Eigen::VectorXd>(px.data(), Eigen::Index(px.size()));
  return fv;
}

FeatureVector extract_local_gabor(const NormalizedFace& face, const GaborBank& bank,
                                  Landmark landmark) {
  const Image& canvas = face.canvas;
  if (canvas.width() < kGaborWindow || canvas.height() < kGaborWindow) {
    throw Error(Errc::InvalidArgument, "canvas smaller than the gabor window");
  }
  const Point c = face.mapped_landmarks[landmark];
  const int half = kGaborWindow / 2;
  const int want_x = static_cast<int>(std::lround(c.x)) - half;
  const int want_y = static_cast<int>(std::lround(c.y)) - half;
  const int x0 = std::clamp(want_x, 0, canvas.width() - kGaborWindow);
  const int y0 = std::clamp(want_y, 0, canvas.height() - kGaborWindow);

  FeatureVector fv;
  fv.layout = FeatureLayout::LocalGabor1960;
  fv.origin = std::string(landmark_name(landmark));
  fv.clamped = x0 != want_x || y0 != want_y;
  const int per_kernel = kGaborGrid * kGaborGrid;
  fv.values.resize(Eigen::Index(bank.size()) * per_kernel);

  // Gather the (flipped) neighbourhood once per sample point, then reuse it for
  // every kernel.
  const int side = bank.kernels().front().side();
  const int r = bank.kernels().front().radius;
  std::vector<double> patch(static_cast<std::size_t>(side * side));
  for (int j = 0; j < kGaborGrid; ++j) {
    for (int i = 0; i < kGaborGrid; ++i) {
      const int px = x0 + kGaborStride * i;
      const int py = y0 + kGaborStride * j;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          patch[static_cast<std::size_t>((dy + r) * side + (dx + r))] =
              canvas.value_or_zero(px - dx, py - dy);
        }
      }
      for (std::size_t kk = 0; kk < bank.size(); ++kk) {
        const auto& taps = bank.kernels()[kk].taps;
        double re = 0.0;
        double im = 0.0;
        for (std::size_t t = 0; t < patch.size(); ++t) {
          re += taps[t].real() * patch[t];
          im += taps[t].imag() * patch[t];
        }
        fv.values(Eigen::Index(kk) * per_kernel + j * kGaborGrid + i) = std::hypot(re, im);
      }
    }
  }
  return fv;
}

FeatureVector extract_local_gabor(const NormalizedFace& face, const GaborBank& bank,
                                  std::string_view landmark) {
  return extract_local_gabor(face, bank, landmark_from_name(landmark));
}

}  // namespace corrface
