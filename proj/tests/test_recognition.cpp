#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "corrface/error.hpp"
#include "corrface/recognition.hpp"
#include "oracles.hpp"

#include <random>

using namespace corrface;

namespace {

Errc error_code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected corrface::Error");
  return Errc::Io;
}

PairedSubspaceModel random_model(Index dx, Index dy, Index k, std::mt19937_64& rng) {
  PairedSubspaceModel m;
  m.w_x = oracle::random_matrix(dx, k, rng);
  m.w_y = oracle::random_matrix(dy, k, rng);
  m.rho = Vector::LinSpaced(k, 0.9, 0.1);
  m.x_mean = oracle::random_matrix(dx, 1, rng);
  m.y_mean = oracle::random_matrix(dy, 1, rng);
  return m;
}

PairedSubspaceModel identity_model(Index d) {
  PairedSubspaceModel m;
  m.w_x = Matrix::Identity(d, d);
  m.w_y = Matrix::Identity(d, d);
  m.rho = Vector::Ones(d);
  m.x_mean = Vector::Zero(d);
  m.y_mean = Vector::Zero(d);
  return m;
}

MultiRegionFeatures single(const Vector& v, const std::string& region = "holistic") {
  MultiRegionFeatures f;
  f.add(region, v);
  return f;
}

}  // namespace

TEST_CASE("projection examples") {
  std::mt19937_64 rng(1);
  const PairedSubspaceModel m = random_model(6, 5, 3, rng);
  const auto [xh, yh] = project_pair(m, m.x_mean, m.y_mean);
  CHECK(xh.norm() == 0.0);
  CHECK(yh.norm() == 0.0);

  const PairedSubspaceModel id = identity_model(4);
  const Vector v = oracle::random_matrix(4, 1, rng);
  CHECK((project_x(id, v) - v).norm() == 0.0);

  for (int t = 0; t < 20; ++t) {
    const PairedSubspaceModel r = random_model(7, 4, 3, rng);
    const Vector x = oracle::random_matrix(7, 1, rng);
    const Vector y = oracle::random_matrix(4, 1, rng);
    const auto [px, py] = project_pair(r, x, y);
    CHECK((px - oracle::naive_matvec_t(r.w_x, x - r.x_mean)).norm() <= 1e-12);
    CHECK((py - oracle::naive_matvec_t(r.w_y, y - r.y_mean)).norm() <= 1e-12);
  }
  CHECK(error_code_of([&] { project_pair(m, Vector::Zero(5), m.y_mean); }) ==
        Errc::DimensionMismatch);
  CHECK(error_code_of([&] { project_y(m, Vector::Zero(6)); }) == Errc::DimensionMismatch);
}

TEST_CASE("score examples") {
  CHECK(score(Vector{{1, 2, 3}}, Vector{{1, 2, 3}}).value == doctest::Approx(1.0));
  CHECK(score(Vector{{1, 0}}, Vector{{0, 1}}).value == doctest::Approx(0.0));
  for (double s : {0.001, 1.0, 7.5, 1e6}) {
    CHECK(std::abs(score(Vector{{1, 1}}, Vector{{s, -s}}).value) <= 1e-15);
    CHECK(score(Vector{{1, 2}}, Vector{{s, 2 * s}}).value == doctest::Approx(1.0));
  }
  const MatchScore z = score(Vector::Zero(3), Vector{{1, 2, 3}});
  CHECK(z.value == 0.0);
  CHECK(z.zero_projection);
  CHECK_FALSE(score(Vector{{1.0}}, Vector{{-2.0}}).zero_projection);
  CHECK(score(Vector{{1.0}}, Vector{{-2.0}}).value == doctest::Approx(-1.0));
}

TEST_CASE("fusion examples") {
  const std::vector<double> one{0.5};
  CHECK(fuse(one) == 0.5);
  const std::vector<double> six{1, 0, -1, 0.2, 0.8, 0};
  CHECK(fuse(six) == doctest::Approx(1.0 / 6.0));
  const std::vector<double> same(6, 0.37);
  CHECK(fuse(same) == doctest::Approx(0.37));
  CHECK(error_code_of([] { fuse(std::vector<double>{}); }) == Errc::EmptyScores);
}

TEST_CASE("matcher construction") {
  CHECK(error_code_of([] { FusedMatcher({}); }) == Errc::InvalidArgument);
  CHECK(error_code_of([] {
          FusedMatcher({{identity_model(2), "a"}, {identity_model(2), "a"}});
        }) == Errc::InvalidArgument);
  const FusedMatcher m({{identity_model(2), "a"}, {identity_model(3), "b"}});
  CHECK(m.regions() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("twin probe under a self-trained model ranks first") {
  std::mt19937_64 rng(9);
  CoupledDataset data;
  data.x_view = oracle::random_matrix(6, 40, rng);
  data.y_view = data.x_view;
  TrainingOptions opts;
  opts.solver.alpha = 1e-12;
  opts.solver.k = 6;
  const FusedMatcher matcher({{train_model(data, opts), "holistic"}});
  std::vector<GalleryEntry> gallery;
  for (int i = 0; i < 20; ++i)
    gallery.push_back({"s" + std::to_string(i), single(data.x_view.col(i))});
  for (int i = 0; i < 20; ++i) {
    const Identification id = identify(matcher, gallery, single(data.y_view.col(i)));
    CHECK(id.top() == "s" + std::to_string(i));
    CHECK(id.ranking.front().score >= 0.99);
    CHECK(id.ranking.size() == 20);
  }
}

TEST_CASE("equal scores keep gallery insertion order") {
  const FusedMatcher matcher({{identity_model(2), "holistic"}});
  const std::vector<GalleryEntry> gallery{{"b", single(Vector{{1, 0}})},
                                          {"a", single(Vector{{2, 0}})},
                                          {"c", single(Vector{{0, 1}})}};
  const Identification id = identify(matcher, gallery, single(Vector{{3, 0}}));
  REQUIRE(id.ranking.size() == 3);
  CHECK(id.ranking[0].identity == "b");
  CHECK(id.ranking[1].identity == "a");
  CHECK(id.ranking[2].identity == "c");
}

TEST_CASE("identify error paths") {
  const FusedMatcher matcher({{identity_model(2), "holistic"}});
  CHECK(error_code_of([&] { identify(matcher, {}, single(Vector{{1, 0}})); }) ==
        Errc::EmptyGallery);
  const std::vector<GalleryEntry> gallery{{"a", single(Vector{{1, 0}})}};
  CHECK(error_code_of([&] {
          identify(matcher, gallery, single(Vector{{1, 0}}, "nose-tip"));
        }) == Errc::RegionMismatch);
  const std::vector<GalleryEntry> bad{{"a", single(Vector{{1, 0}}, "nose-tip")}};
  CHECK(error_code_of([&] { identify(matcher, bad, single(Vector{{1, 0}})); }) ==
        Errc::RegionMismatch);
  CHECK(error_code_of([&] { identify(matcher, gallery, single(Vector{{1, 0, 0}})); }) ==
        Errc::DimensionMismatch);
}

TEST_CASE("multiple gallery images take the max, invalid regions drop out") {
  const FusedMatcher matcher({{identity_model(2), "r1"}, {identity_model(2), "r2"}});
  auto two = [](Vector a, Vector b, bool b_ok = true) {
    MultiRegionFeatures f;
    f.add("r1", std::move(a));
    f.add("r2", std::move(b), b_ok);
    return f;
  };
  std::vector<GalleryEntry> gallery{
      {"a", two(Vector{{0, 1}}, Vector{{0, 1}})},
      {"b", two(Vector{{1, 1}}, Vector{{1, 1}})},
      {"a", two(Vector{{1, 0}}, Vector{{1, 0}})},
  };
  Identification id = identify(matcher, gallery, two(Vector{{1, 0}}, Vector{{1, 0}}));
  REQUIRE(id.ranking.size() == 2);
  CHECK(id.top() == "a");
  CHECK(id.ranking[0].score == doctest::Approx(1.0));
  CHECK_FALSE(id.regions_dropped);

  // r2 invalid on the probe: only r1 counts
  id = identify(matcher, gallery, two(Vector{{1, 0}}, Vector{{0, 1}}, false));
  CHECK(id.regions_dropped);
  CHECK(id.ranking[0].regions_used == 1);
  CHECK(id.ranking[0].score == doctest::Approx(1.0));
}

TEST_CASE("random matcher properties") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<RegionClassifier> cls;
    for (int r = 0; r < 3; ++r)
      cls.push_back({random_model(5 + r, 4 + r, 3, rng), "r" + std::to_string(r)});
    const FusedMatcher matcher(cls);

    auto random_features = [&](bool gallery_side) {
      MultiRegionFeatures f;
      for (int r = 0; r < 3; ++r)
        f.add("r" + std::to_string(r),
              oracle::random_matrix(gallery_side ? 5 + r : 4 + r, 1, rng));
      return f;
    };
    std::vector<GalleryEntry> gallery;
    for (int g = 0; g < 12; ++g) gallery.push_back({"g" + std::to_string(g), random_features(true)});
    const MultiRegionFeatures probe = random_features(false);
    const Identification base = identify(matcher, gallery, probe);

    for (const auto& entry : base.ranking) {
      CHECK(entry.score >= -1.0);
      CHECK(entry.score <= 1.0);
    }

    // scaling the probe about the training mean leaves the ranking unchanged
    MultiRegionFeatures scaled = probe;
    for (int r = 0; r < 3; ++r) {
      const Vector& mu = cls[std::size_t(r)].model.y_mean;
      scaled.values[std::size_t(r)] = mu + 3.7 * (probe.values[std::size_t(r)] - mu);
    }
    const Identification after = identify(matcher, gallery, scaled);
    for (std::size_t i = 0; i < base.ranking.size(); ++i) {
      CHECK(after.ranking[i].identity == base.ranking[i].identity);
      CHECK(after.ranking[i].score == doctest::Approx(base.ranking[i].score).epsilon(1e-12));
    }

    // swapping views and bases together leaves each region score unchanged
    for (int r = 0; r < 3; ++r) {
      const PairedSubspaceModel& m = cls[std::size_t(r)].model;
      PairedSubspaceModel swapped = m;
      std::swap(swapped.w_x, swapped.w_y);
      std::swap(swapped.x_mean, swapped.y_mean);
      const Vector& gx = gallery[0].features.values[std::size_t(r)];
      const Vector& py = probe.values[std::size_t(r)];
      const auto [a, b] = project_pair(m, gx, py);
      const auto [c, d] = project_pair(swapped, py, gx);
      CHECK(score(a, b).value == doctest::Approx(score(d, c).value).epsilon(1e-14));
    }

    // monotone consistency: per-region dominance implies rank order
    std::vector<std::vector<double>> per(gallery.size());
    for (std::size_t g = 0; g < gallery.size(); ++g) {
      for (int r = 0; r < 3; ++r) {
        const auto [a, b] = project_pair(cls[std::size_t(r)].model,
                                         gallery[g].features.values[std::size_t(r)],
                                         probe.values[std::size_t(r)]);
        per[g].push_back(score(a, b).value);
      }
    }
    auto rank_of = [&](const std::string& id) {
      for (std::size_t i = 0; i < base.ranking.size(); ++i)
        if (base.ranking[i].identity == id) return i;
      return base.ranking.size();
    };
    for (std::size_t a = 0; a < gallery.size(); ++a) {
      for (std::size_t b = 0; b < gallery.size(); ++b) {
        bool dominates = true;
        for (std::size_t r = 0; r < 3; ++r) dominates = dominates && per[a][r] >= per[b][r];
        if (dominates && a != b) CHECK(rank_of(gallery[a].identity) < rank_of(gallery[b].identity));
      }
    }
  }
}
