#include "corrface/synth.hpp"

#include "corrface/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>

namespace corrface {

namespace {

using Rng = std::mt19937_64;

Matrix gaussian(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

Vector gaussian_vector(Index n, Rng& rng, double scale = 1.0) {
  return gaussian(n, 1, rng, scale).col(0);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(Errc::InvalidSpec, what);
}

// Overwrite a random `fraction` of the coordinates with independent noise of
// the given per-coordinate scale.
void occlude(Vector& v, double fraction, const Vector& scale, Rng& rng) {
  const auto count = static_cast<Index>(std::lround(fraction * double(v.size())));
  if (count == 0) return;
  std::vector<Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, v.size() - 1);
    std::swap(idx[std::size_t(i)], idx[std::size_t(pick(rng))]);
    const Index c = idx[std::size_t(i)];
    v(c) = scale(c) * normal(rng);
  }
}

// Marginal standard deviation of each coordinate of A z + B u + noise.
Vector marginal_scale(const Matrix& a, const Matrix& b, double nuisance, double noise) {
  Vector s = a.rowwise().squaredNorm();
  if (b.cols() > 0) s += nuisance * nuisance * b.rowwise().squaredNorm();
  return (s.array() + noise * noise).sqrt().matrix();
}

Rng seeded(std::uint64_t seed, std::initializer_list<std::uint64_t> extra) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                   static_cast<std::uint32_t>(seed >> 32)};
  for (auto e : extra) {
    words.push_back(static_cast<std::uint32_t>(e));
    words.push_back(static_cast<std::uint32_t>(e >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace

std::string subject_name(Index index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%04lld", static_cast<long long>(index));
  return buf;
}

void GenerativeSpec::validate() const {
  require(latent_dim >= 1, "latent_dim must be at least 1");
  require(x_dim >= 1 && y_dim >= 1, "view dimensions must be positive");
  require(latent_dim <= std::min(x_dim, y_dim), "latent_dim exceeds a view dimension");
  require(n_train_subjects >= 2, "need at least 2 training subjects");
  require(n_test_subjects >= 1, "need at least 1 test subject");
  require(images_per_subject_per_view >= 1, "images_per_subject_per_view must be >= 1");
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "noise_sigma must be >= 0");
  require(occlusion_fraction >= 0.0 && occlusion_fraction < 1.0,
          "occlusion_fraction must lie in [0, 1)");
  require(nuisance_dim >= 0 && nuisance_scale >= 0.0, "nuisance settings must be >= 0");
  if (a_x) require(a_x->rows() == x_dim && a_x->cols() == latent_dim, "a_x must be x_dim x latent_dim");
  if (a_y) require(a_y->rows() == y_dim && a_y->cols() == latent_dim, "a_y must be y_dim x latent_dim");
}

CoupledSplit generate_coupled(const GenerativeSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  CoupledSplit out;
  out.truth.a_x = spec.a_x ? *spec.a_x : gaussian(spec.x_dim, spec.latent_dim, rng);
  out.truth.a_y = spec.a_y ? *spec.a_y : gaussian(spec.y_dim, spec.latent_dim, rng);
  const Matrix b_x = gaussian(spec.x_dim, spec.nuisance_dim, rng);
  const Matrix b_y = gaussian(spec.y_dim, spec.nuisance_dim, rng);
  const Vector y_scale =
      marginal_scale(out.truth.a_y, b_y, spec.nuisance_scale, spec.noise_sigma);

  const Index m = spec.images_per_subject_per_view;
  auto fill = [&](CoupledDataset& data, Matrix& latent, Index n_subjects, Index first) {
    latent.resize(spec.latent_dim, n_subjects);
    data.x_view.resize(spec.x_dim, n_subjects * m);
    data.y_view.resize(spec.y_dim, n_subjects * m);
    data.subject_ids.clear();
    for (Index s = 0; s < n_subjects; ++s) {
      latent.col(s) = gaussian_vector(spec.latent_dim, rng);
      for (Index j = 0; j < m; ++j) {
        const Index col = s * m + j;
        Vector x = out.truth.a_x * latent.col(s) +
                   gaussian_vector(spec.x_dim, rng, spec.noise_sigma);
        if (spec.nuisance_dim > 0)
          x += b_x * gaussian_vector(spec.nuisance_dim, rng, spec.nuisance_scale);
        Vector y = out.truth.a_y * latent.col(s) +
                   gaussian_vector(spec.y_dim, rng, spec.noise_sigma);
        if (spec.nuisance_dim > 0)
          y += b_y * gaussian_vector(spec.nuisance_dim, rng, spec.nuisance_scale);
        occlude(y, spec.occlusion_fraction, y_scale, rng);
        data.x_view.col(col) = x;
        data.y_view.col(col) = y;
        data.subject_ids.push_back(subject_name(first + s));
      }
    }
  };
  fill(out.train, out.truth.train_latent, spec.n_train_subjects, 0);
  fill(out.test, out.truth.test_latent, spec.n_test_subjects, spec.n_train_subjects);
  return out;
}

void PoseFamilySpec::validate() const {
  require(latent_dim >= 1, "latent_dim must be at least 1");
  require(latent_dim <= std::min(holistic_dim, local_dim),
          "latent_dim exceeds a region dimension");
  require(!poses_deg.empty(), "poses_deg must not be empty");
  require(n_train_subjects >= 2, "need at least 2 training subjects");
  require(n_test_subjects >= 1, "need at least 1 test subject");
  require(images_per_subject_per_pose >= 1, "images_per_subject_per_pose must be >= 1");
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "noise_sigma must be >= 0");
  require(occlusion_fraction >= 0.0 && occlusion_fraction < 1.0,
          "occlusion_fraction must lie in [0, 1)");
  require(nuisance_dim >= 0 && nuisance_scale >= 0.0, "nuisance settings must be >= 0");
  std::vector<double> p = poses_deg;
  std::sort(p.begin(), p.end());
  require(std::adjacent_find(p.begin(), p.end()) == p.end(), "poses_deg has duplicates");
}

PoseSplit generate_pose_family(const PoseFamilySpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Index q = spec.latent_dim;
  const double norm = 1.0 / std::sqrt(double(q));

  struct RegionMaps {
    Matrix a0, a1, b;
  };
  std::vector<std::string> names{"holistic"};
  for (Landmark l : kLandmarks) names.emplace_back(landmark_name(l));
  std::vector<RegionMaps> maps;
  for (std::size_t r = 0; r < names.size(); ++r) {
    const Index d = r == 0 ? spec.holistic_dim : spec.local_dim;
    RegionMaps rm;
    rm.a0 = gaussian(d, q, rng, norm);
    rm.a1 = gaussian(d, q, rng, norm);
    rm.b = gaussian(d, spec.nuisance_dim,  rng,
                    spec.nuisance_dim > 0 ? 1.0 / std::sqrt(double(spec.nuisance_dim)) : 1.0);
    maps.push_back(std::move(rm));
  }

  double max_pose = 0.0;
  for (double p : spec.poses_deg) max_pose = std::max(max_pose, std::abs(p));

  struct PoseMaps {
    std::vector<Matrix> a;
    std::vector<Vector> scale;
    double occlusion = 0.0;
  };
  std::vector<PoseMaps> at_pose;
  for (double p : spec.poses_deg) {
    PoseMaps pm;
    const double t = spec.mixing_rate * p * std::numbers::pi / 180.0;
    for (const auto& rm : maps) {
      pm.a.push_back(std::cos(t) * rm.a0 + std::sin(t) * rm.a1);
      pm.scale.push_back(
          marginal_scale(pm.a.back(), rm.b, spec.nuisance_scale, spec.noise_sigma));
    }
    pm.occlusion = max_pose > 0.0 ? spec.occlusion_fraction * std::abs(p) / max_pose : 0.0;
    at_pose.push_back(std::move(pm));
  }

  auto fill = [&](PoseDataset& data, Index n_subjects, Index first) {
    data.region_names = names;
    for (Index s = 0; s < n_subjects; ++s) {
      const Vector z = gaussian_vector(q, rng);
      for (std::size_t pi = 0; pi < spec.poses_deg.size(); ++pi) {
        const PoseMaps& pm = at_pose[pi];
        for (Index j = 0; j < spec.images_per_subject_per_pose; ++j) {
          Observation obs;
          obs.subject_id = subject_name(first + s);
          obs.pose_deg = spec.poses_deg[pi];
          obs.image_index = static_cast<int>(j);
          const Vector u = gaussian_vector(spec.nuisance_dim, rng, spec.nuisance_scale);
          for (std::size_t r = 0; r < names.size(); ++r) {
            Vector v = pm.a[r] * z + gaussian_vector(pm.a[r].rows(), rng, spec.noise_sigma);
            if (spec.nuisance_dim > 0) v += maps[r].b * u;
            occlude(v, pm.occlusion, pm.scale[r], rng);
            obs.regions.push_back(std::move(v));
            obs.valid.push_back(true);
          }
          data.observations.push_back(std::move(obs));
        }
      }
    }
  };
  PoseSplit out;
  fill(out.train, spec.n_train_subjects, 0);
  fill(out.test, spec.n_test_subjects, spec.n_train_subjects);
  return out;
}

// ---- rasters ---------------------------------------------------------------

namespace {

struct Grating {
  double cx, cy;      // centre in face coordinates
  double freq, theta, phase, amp, width;
};

struct SubjectLook {
  double head_a, head_b;  // ellipse semi-axes; head_a doubles as cylinder radius
  double skin;
  double shade_amp, shade_fx, shade_fy, shade_phase;
  Landmarks face_points;  // in face coordinates (origin at head centre)
  std::vector<Grating> gratings;
  double eye_dark, mouth_dark;
};

SubjectLook make_look(const SyntheticRasterSpec& spec, int subject) {
  Rng rng = seeded(spec.seed, {std::uint64_t(subject), 0x5eed});
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double s = std::min(spec.width / 160.0, spec.height / 200.0);
  SubjectLook look;
  look.head_a = s * (54.0 + 4.0 * u(rng));
  look.head_b = s * (72.0 + 4.0 * u(rng));
  look.skin = 0.5 + 0.08 * u(rng);
  look.shade_amp = 0.06 + 0.04 * unit(rng);
  look.shade_fx = 0.03 * u(rng);
  look.shade_fy = 0.03 * u(rng);
  look.shade_phase = std::numbers::pi * u(rng);
  const double ex = s * (22.0 + 3.0 * u(rng));
  const double ey = s * (-18.0 + 3.0 * u(rng));
  const double ny = s * (12.0 + 3.0 * u(rng));
  const double mx = s * (17.0 + 3.0 * u(rng));
  const double my = s * (36.0 + 3.0 * u(rng));
  look.face_points[Landmark::LeftEye] = {-ex, ey};
  look.face_points[Landmark::RightEye] = {ex, ey + s * 1.5 * u(rng)};
  look.face_points[Landmark::NoseTip] = {s * 2.0 * u(rng), ny};
  look.face_points[Landmark::LeftMouth] = {-mx, my};
  look.face_points[Landmark::RightMouth] = {mx, my + s * 1.5 * u(rng)};
  for (Landmark l : kLandmarks) {
    for (int g = 0; g < 2; ++g) {
      Grating gr;
      gr.cx = look.face_points[l].x + s * 3.0 * u(rng);
      gr.cy = look.face_points[l].y + s * 3.0 * u(rng);
      gr.freq = (0.3 + 0.6 * unit(rng)) / s;
      gr.theta = std::numbers::pi * unit(rng);
      gr.phase = 2.0 * std::numbers::pi * unit(rng);
      gr.amp = 0.08 + 0.08 * unit(rng);
      gr.width = s * (6.0 + 3.0 * unit(rng));
      look.gratings.push_back(gr);
    }
  }
  look.eye_dark = 0.25 + 0.1 * unit(rng);
  look.mouth_dark = 0.2 + 0.1 * unit(rng);
  return look;
}

double blob(double x, double y, double cx, double cy, double sx, double sy) {
  const double dx = (x - cx) / sx;
  const double dy = (y - cy) / sy;
  return std::exp(-0.5 * (dx * dx + dy * dy));
}

// Intensity of the unwarped face at face coordinates (u, v).
double face_intensity(const SubjectLook& look, double u, double v, double scale) {
  const double r = (u / look.head_a) * (u / look.head_a) + (v / look.head_b) * (v / look.head_b);
  const double inside = 1.0 / (1.0 + std::exp(12.0 * (std::sqrt(r) - 1.0)));
  double f = look.skin + look.shade_amp * std::cos(look.shade_fx * u + look.shade_fy * v +
                                                   look.shade_phase);
  for (Landmark l : {Landmark::LeftEye, Landmark::RightEye}) {
    const Point& p = look.face_points[l];
    f -= look.eye_dark * blob(u, v, p.x, p.y, 5.0 * scale, 3.0 * scale);
  }
  const Point& lm = look.face_points[Landmark::LeftMouth];
  const Point& rm = look.face_points[Landmark::RightMouth];
  const double mouth_half = (rm.x - lm.x) / 2.0;
  f -= look.mouth_dark * blob(u, v, (lm.x + rm.x) / 2.0, (lm.y + rm.y) / 2.0, mouth_half,
                              2.5 * scale);
  const Point& n = look.face_points[Landmark::NoseTip];
  f += 0.1 * blob(u, v, n.x, n.y, 4.0 * scale, 6.0 * scale);
  for (const auto& g : look.gratings) {
    const double w = blob(u, v, g.cx, g.cy, g.width, g.width);
    if (w < 1e-6) continue;
    const double along = std::cos(g.theta) * u + std::sin(g.theta) * v;
    f += g.amp * w * std::cos(g.freq * along + g.phase);
  }
  const double background = 0.12;
  return background + inside * (f - background);
}

}  // namespace

void SyntheticRasterSpec::validate() const {
  require(width >= 64 && height >= 64, "canvas must be at least 64x64");
  require(n_subjects >= 1, "n_subjects must be >= 1");
  require(!poses_deg.empty(), "poses_deg must not be empty");
  require(images_per_subject_per_pose >= 1, "images_per_subject_per_pose must be >= 1");
  require(noise_sigma >= 0.0 && illumination >= 0.0, "noise settings must be >= 0");
  require(jitter_deg >= 0.0 && jitter_scale >= 0.0 && jitter_scale < 0.5 && jitter_shift >= 0.0,
          "jitter settings out of range");
  require(occlusion_fraction >= 0.0 && occlusion_fraction < 1.0,
          "occlusion_fraction must lie in [0, 1)");
  for (double p : poses_deg) {
    require(std::abs(yaw_gain * p) < 70.0, "yaw_gain * pose must stay below 70 degrees");
  }
}

std::vector<FaceSample> generate_rasters(const SyntheticRasterSpec& spec) {
  spec.validate();
  const double scale = std::min(spec.width / 160.0, spec.height / 200.0);
  std::vector<FaceSample> out;
  for (int si = 0; si < spec.n_subjects; ++si) {
    const int subject = spec.first_subject + si;
    const SubjectLook look = make_look(spec, subject);
    for (std::size_t pi = 0; pi < spec.poses_deg.size(); ++pi) {
      const double pose = spec.poses_deg[pi];
      const double yaw = spec.yaw_gain * pose * std::numbers::pi / 180.0;
      for (int j = 0; j < spec.images_per_subject_per_pose; ++j) {
        Rng rng = seeded(spec.seed, {std::uint64_t(subject), std::uint64_t(j), 0x1a6e});
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const double roll = spec.jitter_deg * u(rng) * std::numbers::pi / 180.0;
        const double zoom = 1.0 + spec.jitter_scale * u(rng);
        const double shx = spec.jitter_shift * u(rng);
        const double shy = spec.jitter_shift * u(rng);
        const double gain = 1.0 + spec.illumination * u(rng);
        const double offset = 0.5 * spec.illumination * u(rng);
        const std::complex<double> z = std::polar(zoom, roll);
        const std::complex<double> centre(spec.width / 2.0 + shx,
                                          spec.height / 2.0 + shy + 6.0 * scale);
        const double radius = look.head_a;

        FaceSample sample;
        sample.subject_id = subject_name(subject);
        sample.pose_deg = pose;
        sample.image = Image(spec.width, spec.height);
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (int y = 0; y < spec.height; ++y) {
          for (int x = 0; x < spec.width; ++x) {
            const std::complex<double> h = (std::complex<double>(x, y) - centre) / z;
            double value = 0.12;
            if (std::abs(h.real()) < radius) {
              const double beta = std::asin(h.real() / radius) - yaw;
              value = std::abs(beta) < std::numbers::pi / 2.0
                          ? face_intensity(look, radius * std::sin(beta), h.imag(), scale)
                          : 0.2;
            }
            const double n = spec.noise_sigma > 0.0 ? noise(rng) : 0.0;
            sample.image.at(x, y) = std::clamp(gain * value + offset + n, 0.0, 1.0);
          }
        }
        for (Landmark l : kLandmarks) {
          const Point p = look.face_points[l];
          const double xw = radius * std::sin(std::asin(std::clamp(p.x / radius, -1.0, 1.0)) + yaw);
          const std::complex<double> q = centre + z * std::complex<double>(xw, p.y);
          sample.landmarks[l] = {q.real(), q.imag()};
        }
        if (pose != 0.0 && spec.occlusion_fraction > 0.0) {
          Rng occ = seeded(spec.seed, {std::uint64_t(subject), std::uint64_t(j), pi, 0x0cc1});
          std::uniform_real_distribution<double> unit(0.0, 1.0);
          const double area = spec.occlusion_fraction * 4.0 * look.head_a * look.head_b;
          const double aspect = 0.6 + 0.8 * unit(occ);
          const int bw = std::clamp(int(std::sqrt(area * aspect)), 1, spec.width);
          const int bh = std::clamp(int(area / std::max(1, bw)), 1, spec.height);
          const int x0 = int(unit(occ) * (spec.width - bw));
          const int y0 = int(unit(occ) * (spec.height - bh));
          for (int y = y0; y < y0 + bh; ++y)
            for (int x = x0; x < x0 + bw; ++x) sample.image.at(x, y) = unit(occ);
        }
        out.push_back(std::move(sample));
      }
    }
  }
  return out;
}

}  // namespace corrface
