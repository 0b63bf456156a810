#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "corrface/error.hpp"
#include "corrface/subspace.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace corrface;

namespace {

CoupledDataset make_data(const Matrix& x, const Matrix& y) {
  CoupledDataset d;
  d.x_view = x;
  d.y_view = y;
  return d;
}

// Two views sharing a q-dimensional latent signal plus independent noise.
CoupledDataset correlated_data(Index dx, Index dy, Index n, Index q,
                               std::mt19937_64& rng, double noise = 0.5) {
  const Matrix z = oracle::random_matrix(q, n, rng);
  const Matrix ax = oracle::random_matrix(dx, q, rng);
  const Matrix ay = oracle::random_matrix(dy, q, rng);
  return make_data(ax * z + oracle::random_matrix(dx, n, rng, noise),
                   ay * z + oracle::random_matrix(dy, n, rng, noise));
}

Errc error_code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected corrface::Error");
  return Errc::Io;
}

double pair_residual_x(const CovarianceBlocks& b, const PairedSubspaceModel& m,
                    Index i) {
  const Matrix cxx = b.c_xx + m.alpha * Matrix::Identity(b.x_dim(), b.x_dim());
  const Vector r = b.c_xy * m.w_y.col(i) - m.rho(i) * cxx * m.w_x.col(i);
  return r.norm() / b.c_xy.norm();
}

double pair_residual_y(const CovarianceBlocks& b, const PairedSubspaceModel& m,
                      Index i) {
  const Matrix cyy = b.c_yy + m.alpha * Matrix::Identity(b.y_dim(), b.y_dim());
  const Vector r = b.c_xy.transpose() * m.w_x.col(i) - m.rho(i) * cyy * m.w_y.col(i);
  return r.norm() / b.c_xy.norm();
}

}  // namespace

TEST_CASE("covariance of the symmetric two-point sample") {
  Matrix x(1, 2);
  x << 1, -1;
  const auto b = compute_covariance_blocks(make_data(x, x));
  CHECK(b.c_xx(0, 0) == doctest::Approx(1.0));
  CHECK(b.c_yy(0, 0) == doctest::Approx(1.0));
  CHECK(b.c_xy(0, 0) == doctest::Approx(1.0));
  CHECK(b.x_mean(0) == doctest::Approx(0.0));
  CHECK(b.n == 2);
}

TEST_CASE("covariance of identical columns is zero") {
  Matrix x(3, 4);
  for (Index j = 0; j < 4; ++j) x.col(j) << 1.5, -2.0, 7.0;
  const auto b = compute_covariance_blocks(make_data(x, x));
  CHECK(b.c_xx.cwiseAbs().maxCoeff() == 0.0);
  CHECK((b.x_mean - x.col(0)).norm() == 0.0);
}

TEST_CASE("covariance blocks match the brute-force loop") {
  std::mt19937_64 rng(7);
  const Matrix x = oracle::random_matrix(5, 20, rng);
  const Matrix y = oracle::random_matrix(4, 20, rng);
  const auto b = compute_covariance_blocks(make_data(x, y));
  const auto ref = oracle::brute_covariance(x, y);
  CHECK((b.c_xx - ref.cxx).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((b.c_yy - ref.cyy).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((b.c_xy - ref.cxy).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((b.x_mean - ref.x_mean).norm() < 1e-12);
  CHECK((b.y_mean - ref.y_mean).norm() < 1e-12);
  CHECK(b.c_xx == b.c_xx.transpose());
  CHECK((b.total().topRightCorner(5, 4) - b.c_xy).norm() == 0.0);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(b.c_xx);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * eig.eigenvalues().maxCoeff());
}

TEST_CASE("covariance errors") {
  Matrix one(2, 1);
  one << 1, 2;
  CHECK(error_code_of([&] { compute_covariance_blocks(make_data(one, one)); }) ==
        Errc::EmptyDataset);

  Matrix x = Matrix::Ones(2, 5);
  x(1, 3) = std::numeric_limits<double>::quiet_NaN();
  try {
    compute_covariance_blocks(make_data(x, Matrix::Ones(2, 5)));
    FAIL("expected NonFiniteInput");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonFiniteInput);
    CHECK(std::string(e.what()).find("column 3") != std::string::npos);
  }
  Matrix y = Matrix::Ones(3, 5);
  y(0, 0) = std::numeric_limits<double>::infinity();
  CHECK(error_code_of([&] {
          compute_covariance_blocks(make_data(Matrix::Ones(2, 5), y));
        }) == Errc::NonFiniteInput);
  CHECK(error_code_of([&] {
          compute_covariance_blocks(make_data(Matrix::Ones(2, 5), Matrix::Ones(2, 4)));
        }) == Errc::DimensionMismatch);
}

TEST_CASE("regularize adds alpha to the view diagonals only") {
  CovarianceBlocks b;
  b.c_xx = Matrix::Ones(1, 1);
  b.c_yy = Matrix::Ones(1, 1);
  b.c_xy = Matrix::Constant(1, 1, 0.3);
  b.x_mean = Vector::Zero(1);
  b.y_mean = Vector::Zero(1);
  b.n = 10;

  const auto same = regularize(b, 0.0);
  CHECK(same.c_xx == b.c_xx);
  CHECK(same.ridge == 0.0);

  const auto half = regularize(b, 0.5);
  CHECK(half.c_xx(0, 0) == doctest::Approx(1.5));
  CHECK(half.c_yy(0, 0) == doctest::Approx(1.5));
  CHECK(half.c_xy(0, 0) == 0.3);

  CovarianceBlocks zero;
  zero.c_xx = Matrix::Zero(3, 3);
  zero.c_yy = Matrix::Zero(2, 2);
  zero.c_xy = Matrix::Zero(3, 2);
  const auto tiny = regularize(zero, 1e-6);
  CHECK((tiny.c_xx - 1e-6 * Matrix::Identity(3, 3)).norm() == 0.0);

  CHECK(error_code_of([&] { regularize(b, -1e-3); }) == Errc::NegativeAlpha);
}

TEST_CASE("a view is perfectly correlated with itself") {
  std::mt19937_64 rng(11);
  const Matrix x = oracle::random_matrix(10, 30, rng);
  const auto b = compute_covariance_blocks(make_data(x, x));
  SolverConfig cfg;
  cfg.alpha = 1e-12;
  cfg.k = 10;
  const auto m = solve_cca(b, cfg);
  REQUIRE(m.k() == 10);
  CHECK(m.rho.minCoeff() >= 1.0 - 1e-6);
  for (Index j = 0; j < m.k(); ++j) {
    const double same = (m.w_x.col(j) - m.w_y.col(j)).norm();
    const double flipped = (m.w_x.col(j) + m.w_y.col(j)).norm();
    CHECK(std::min(same, flipped) < 1e-6 * m.w_x.col(j).norm());
  }
}

TEST_CASE("independent white noise gives small canonical correlations") {
  const Index d = 4;
  const Index n = 10000;
  // Monte-Carlo null distribution of the leading correlation, via the oracle.
  std::mt19937_64 null_rng(2024);
  std::vector<double> leading;
  for (int rep = 0; rep < 200; ++rep) {
    const Matrix x = oracle::random_matrix(d, n, null_rng);
    const Matrix y = oracle::random_matrix(d, n, null_rng);
    const auto c = oracle::brute_covariance(x, y);
    const Matrix reg = 1e-6 * Matrix::Identity(d, d);
    leading.push_back(
        oracle::whitened_svd_cca(c.cxx + reg, c.cyy + reg, c.cxy).rho(0));
  }
  std::sort(leading.begin(), leading.end());
  const double p99 = leading[static_cast<std::size_t>(0.99 * leading.size())];
  CHECK(p99 < 0.1);

  std::mt19937_64 rng(42);
  const Matrix x = oracle::random_matrix(d, n, rng);
  const Matrix y = oracle::random_matrix(d, n, rng);
  SolverConfig cfg;
  cfg.k = d;
  const auto m = solve_cca(compute_covariance_blocks(make_data(x, y)), cfg);
  CHECK(m.rho.maxCoeff() <= 0.1);
  CHECK(m.rho(0) <= p99 * 1.5);
}

TEST_CASE("solve_cca agrees with the whitened-SVD oracle on a small instance") {
  std::mt19937_64 rng(5);
  const auto data = correlated_data(5, 4, 50, 2, rng);
  const auto b = compute_covariance_blocks(data);
  SolverConfig cfg;
  cfg.k = 4;
  const auto m = solve_cca(b, cfg);
  const Matrix reg = cfg.alpha * Matrix::Identity(5, 5);
  const Matrix regy = cfg.alpha * Matrix::Identity(4, 4);
  const auto ref = oracle::whitened_svd_cca(b.c_xx + reg, b.c_yy + regy, b.c_xy);
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::abs(m.rho(i) - ref.rho(i)) < 1e-8);
    CHECK(oracle::vector_angle(m.w_x.col(i), ref.wx.col(i)) < 1e-6);
    CHECK(oracle::vector_angle(m.w_y.col(i), ref.wy.col(i)) < 1e-6);
  }
}

TEST_CASE("property: solve_cca invariants over random instances") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<Index> dim(1, 12);
  const double alphas[] = {1e-12, 1e-6, 1e-2};
  for (int trial = 0; trial < 30; ++trial) {
    const Index dx = dim(rng);
    const Index dy = dim(rng);
    const double alpha = alphas[trial % 3];
    const Index n_min = alpha < 1e-9 ? 2 * std::max(dx, dy) + 2 : 3;
    std::uniform_int_distribution<Index> samples(n_min, 120);
    const Index n = samples(rng);
    const auto b = compute_covariance_blocks(
        correlated_data(dx, dy, n, std::min(dx, dy), rng));
    SolverConfig cfg;
    cfg.alpha = alpha;
    cfg.k = std::min(dx, dy);
    const auto m = solve_cca(b, cfg);
    CAPTURE(trial);

    for (Index i = 0; i + 1 < m.k(); ++i) CHECK(m.rho(i) >= m.rho(i + 1));
    CHECK(m.rho.minCoeff() >= 0.0);
    CHECK(m.rho.maxCoeff() <= 1.0 + 1e-8);

    const Matrix cxx = b.c_xx + alpha * Matrix::Identity(dx, dx);
    const Matrix cyy = b.c_yy + alpha * Matrix::Identity(dy, dy);
    const Matrix gx = m.w_x.transpose() * cxx * m.w_x;
    const Matrix gy = m.w_y.transpose() * cyy * m.w_y;
    CHECK((gx - Matrix::Identity(m.k(), m.k())).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((gy - Matrix::Identity(m.k(), m.k())).cwiseAbs().maxCoeff() < 1e-8);

    if (b.c_xy.norm() > 0) {
      for (Index i = 0; i < m.k(); ++i) {
        CHECK(pair_residual_x(b, m, i) <= 1e-6);
        CHECK(pair_residual_y(b, m, i) <= 1e-6);
      }
    }

    // The largest-magnitude x entry of each pair is positive.
    for (Index j = 0; j < m.k(); ++j) {
      Index arg = 0;
      m.w_x.col(j).cwiseAbs().maxCoeff(&arg);
      CHECK(m.w_x(arg, j) > 0.0);
    }
  }
}

TEST_CASE("solve_cca is bit-identical on identical input") {
  std::mt19937_64 rng(3);
  const auto b = compute_covariance_blocks(correlated_data(8, 6, 40, 3, rng));
  SolverConfig cfg;
  cfg.k = 6;
  const auto a = solve_cca(b, cfg);
  const auto c = solve_cca(b, cfg);
  CHECK(a.w_x == c.w_x);
  CHECK(a.w_y == c.w_y);
  CHECK(a.rho == c.rho);
}

TEST_CASE("data-span route and dense route give the same model") {
  std::mt19937_64 rng(17);
  // n < d triggers the span route when the data factor is present.
  const auto b = compute_covariance_blocks(correlated_data(30, 25, 12, 4, rng));
  CovarianceBlocks dense = b;
  dense.x_factor.reset();
  dense.y_factor.reset();
  SolverConfig cfg;
  cfg.alpha = 1e-2;
  cfg.k = 11;
  const auto span = solve_cca(b, cfg);
  const auto full = solve_cca(dense, cfg);
  REQUIRE(span.k() == full.k());
  CHECK((span.rho - full.rho).cwiseAbs().maxCoeff() < 1e-10);
  for (Index i = 0; i < span.k(); ++i) {
    CHECK(oracle::vector_angle(span.w_x.col(i), full.w_x.col(i)) < 1e-6);
  }

  cfg.method = Method::PLS;
  const auto pls_span = solve_pls(b, cfg);
  const auto pls_full = solve_pls(dense, cfg);
  CHECK((pls_span.rho - pls_full.rho).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("k is clamped and reported, not rejected") {
  std::mt19937_64 rng(8);
  const auto b = compute_covariance_blocks(correlated_data(6, 3, 20, 2, rng));
  SolverConfig cfg;
  cfg.k = 50;
  const auto m = solve_cca(b, cfg);
  CHECK(m.k() == 3);
  CHECK(m.k_clamped);
  CHECK(m.k_requested == 50);

  // With n - 1 smaller than both dimensions the sample count limits k.
  const auto small = compute_covariance_blocks(correlated_data(6, 5, 4, 2, rng));
  CHECK(solve_cca(small, cfg).k() == 3);

  cfg.k = 0;
  CHECK(error_code_of([&] { solve_cca(b, cfg); }) == Errc::InvalidArgument);
}

TEST_CASE("rank-deficient view with alpha zero is singular") {
  std::mt19937_64 rng(4);
  Matrix x = oracle::random_matrix(4, 30, rng);
  x.row(3) = x.row(0) + x.row(1);
  const Matrix y = oracle::random_matrix(3, 30, rng);
  const auto b = compute_covariance_blocks(make_data(x, y));
  SolverConfig cfg;
  cfg.alpha = 0.0;
  cfg.k = 3;
  try {
    solve_cca(b, cfg);
    FAIL("expected SingularCovariance");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SingularCovariance);
    CHECK(std::string(e.what()).find("alpha") != std::string::npos);
  }
  // The same blocks are fine once regularized.
  cfg.alpha = 1e-6;
  CHECK(solve_cca(b, cfg).k() == 3);
  // n < d without a ridge is singular on the span route too.
  const auto thin = compute_covariance_blocks(correlated_data(10, 10, 5, 2, rng));
  cfg.alpha = 0.0;
  CHECK(error_code_of([&] { solve_cca(thin, cfg); }) == Errc::SingularCovariance);
}

TEST_CASE("pre-regularized blocks are accepted only with the same alpha") {
  std::mt19937_64 rng(21);
  const auto b = compute_covariance_blocks(correlated_data(5, 5, 40, 2, rng));
  SolverConfig cfg;
  cfg.alpha = 1e-3;
  cfg.k = 5;
  const auto direct = solve_cca(b, cfg);
  const auto pre = solve_cca(regularize(b, 1e-3), cfg);
  CHECK((direct.rho - pre.rho).cwiseAbs().maxCoeff() < 1e-12);
  cfg.alpha = 1e-2;
  CHECK(error_code_of([&] { solve_cca(regularize(b, 1e-3), cfg); }) ==
        Errc::InvalidArgument);
}

TEST_CASE("tied correlations are reported in the metadata") {
  std::mt19937_64 rng(10);
  const Matrix x = oracle::random_matrix(4, 40, rng);
  const auto b = compute_covariance_blocks(make_data(x, x));
  SolverConfig cfg;
  cfg.alpha = 0.0;
  cfg.k = 4;
  cfg.eigen_tolerance = 1e-8;
  const auto m = solve_cca(b, cfg);
  CHECK(m.ties.size() == 3);
}

TEST_CASE("unified framework: CCA agrees with solve_cca") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto b = compute_covariance_blocks(correlated_data(7, 5, 60, 3, rng));
    SolverConfig cfg;
    cfg.k = 5;
    const auto direct = solve_cca(b, cfg);
    const auto unified = solve_unified(b, cfg);
    CHECK((direct.rho - unified.rho).cwiseAbs().maxCoeff() < 1e-8);
    for (Index i = 0; i < cfg.k; ++i) {
      const double gap_lo = i + 1 < cfg.k ? direct.rho(i) - direct.rho(i + 1) : 1.0;
      const double gap_hi = i > 0 ? direct.rho(i - 1) - direct.rho(i) : 1.0;
      if (std::min(gap_lo, gap_hi) > 1e-4) {
        CHECK(oracle::vector_angle(direct.w_x.col(i), unified.w_x.col(i)) < 1e-6);
        CHECK(oracle::vector_angle(direct.w_y.col(i), unified.w_y.col(i)) < 1e-6);
        // Same sign convention on both paths.
        CHECK(direct.w_x.col(i).dot(unified.w_x.col(i)) > 0.0);
      }
    }
  }
}

TEST_CASE("unified framework: PLS with diagonal cross-covariance") {
  CovarianceBlocks b;
  b.c_xx = Matrix::Identity(2, 2);
  b.c_yy = Matrix::Identity(2, 2);
  b.c_xy = Matrix::Zero(2, 2);
  b.c_xy(0, 0) = 3.0;
  b.c_xy(1, 1) = 1.0;
  b.x_mean = Vector::Zero(2);
  b.y_mean = Vector::Zero(2);
  b.n = 100;
  SolverConfig cfg;
  cfg.method = Method::PLS;
  cfg.k = 2;
  for (const auto& m : {solve_unified(b, cfg), solve_pls(b, cfg)}) {
    CHECK(m.rho(0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(m.rho(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((m.w_x.cwiseAbs() - Matrix::Identity(2, 2)).norm() < 1e-12);
    CHECK((m.w_y.cwiseAbs() - Matrix::Identity(2, 2)).norm() < 1e-12);
  }
  const auto problem = make_unified_problem(b, Method::PLS, 0.0);
  CHECK(problem.b_matrix == Matrix::Identity(4, 4));
}

TEST_CASE("unified framework: axis-aligned PCA") {
  CovarianceBlocks b;
  b.c_xx = Matrix::Zero(2, 2);
  b.c_xx(0, 0) = 4.0;
  b.c_xx(1, 1) = 1.0;
  b.c_yy = Matrix::Identity(2, 2);
  b.c_xy = Matrix::Zero(2, 2);
  b.x_mean = Vector::Zero(2);
  b.y_mean = Vector::Zero(2);
  b.n = 50;
  SolverConfig cfg;
  cfg.method = Method::PCA;
  cfg.k = 2;
  for (const auto& m : {solve_unified(b, cfg), solve_pca(b, cfg)}) {
    CHECK(m.rho(0) == doctest::Approx(4.0));
    CHECK(m.rho(1) == doctest::Approx(1.0));
    CHECK(m.w_x(0, 0) == doctest::Approx(1.0));
    CHECK(m.w_x(1, 0) == doctest::Approx(0.0));
    CHECK(m.w_y.cols() == 0);
  }
}

TEST_CASE("unified CCA problem uses the regularized view covariances") {
  std::mt19937_64 rng(2);
  const auto b = compute_covariance_blocks(correlated_data(3, 2, 30, 1, rng));
  const auto p = make_unified_problem(b, Method::CCA, 0.25);
  CHECK(p.b_matrix(0, 0) == doctest::Approx(b.c_xx(0, 0) + 0.25));
  CHECK(p.b_matrix(3, 4) == doctest::Approx(b.c_yy(0, 1)));
  CHECK(p.b_matrix(0, 3) == 0.0);
  CHECK(p.a_matrix.topLeftCorner(3, 3).norm() == 0.0);
  CHECK(p.a_matrix(4, 2) == doctest::Approx(b.c_xy(2, 1)));
}

TEST_CASE("unified eigen-residual is small for every returned pair") {
  std::mt19937_64 rng(77);
  const auto b = compute_covariance_blocks(correlated_data(6, 6, 80, 3, rng));
  SolverConfig cfg;
  cfg.k = 6;
  const auto m = solve_unified(b, cfg);
  const auto p = make_unified_problem(b, Method::CCA, cfg.alpha);
  const Eigen::LLT<Matrix> llt(p.b_matrix);
  for (Index i = 0; i < m.k(); ++i) {
    Vector w(12);
    w << m.w_x.col(i), m.w_y.col(i);
    const Vector r = llt.solve(p.a_matrix * w) - m.rho(i) * w;
    CHECK(r.norm() <= 1e-8 * p.a_matrix.norm() * w.norm());
  }
}

TEST_CASE("pca_whiten round-trips full-rank data") {
  std::mt19937_64 rng(12);
  const Matrix x = oracle::random_matrix(6, 40, rng);
  const Matrix y = oracle::random_matrix(6, 40, rng);
  const auto r = pca_whiten(make_data(x, y), 6);
  for (Index j = 0; j < 40; ++j) {
    CHECK((r.x_projection.reconstruct(r.data.x_view.col(j)) - x.col(j)).norm() < 1e-10);
    CHECK((r.y_projection.reconstruct(r.data.y_view.col(j)) - y.col(j)).norm() < 1e-10);
  }
}

TEST_CASE("pca_whiten captures rank-2 data exactly") {
  std::mt19937_64 rng(13);
  const Matrix x = oracle::random_matrix(8, 2, rng) * oracle::random_matrix(2, 30, rng);
  const auto r = pca_whiten(make_data(x, x), 2);
  double residual = 0.0;
  for (Index j = 0; j < 30; ++j) {
    residual += (r.x_projection.reconstruct(r.data.x_view.col(j)) - x.col(j)).squaredNorm();
  }
  CHECK(residual <= 1e-10);
}

TEST_CASE("pca_whiten decorrelates the retained coordinates") {
  std::mt19937_64 rng(14);
  const Matrix x = oracle::random_matrix(10, 4, rng) * oracle::random_matrix(4, 60, rng) +
                   oracle::random_matrix(10, 60, rng, 0.1);
  const auto r = pca_whiten(make_data(x, x), 5);
  const auto cov = oracle::brute_covariance(r.data.x_view, r.data.x_view).cxx;
  Matrix off = cov;
  off.diagonal().setZero();
  CHECK(off.cwiseAbs().maxCoeff() < 1e-8);
  for (Index i = 0; i < 5; ++i) {
    CHECK(cov(i, i) == doctest::Approx(r.x_projection.variances(i)).epsilon(1e-10));
  }
  CHECK(error_code_of([&] { pca_whiten(make_data(x, x), 60); }) == Errc::RetainedTooLarge);
  CHECK(error_code_of([&] { pca_whiten(make_data(x, x), 0); }) == Errc::RetainedTooLarge);
}

TEST_CASE("train_model folds the PCA stage back into the bases") {
  std::mt19937_64 rng(15);
  const auto data = correlated_data(10, 10, 80, 3, rng);
  TrainingOptions opts;
  opts.solver.k = 3;
  opts.pca_retained = 10;
  const auto m = train_model(data, opts);
  CHECK(m.w_x.rows() == 10);
  CHECK(m.w_y.rows() == 10);
  // Full-rank PCA keeps everything, so correlations match the direct solve.
  TrainingOptions direct = opts;
  direct.pca_retained.reset();
  const auto ref = train_model(data, direct);
  CHECK((m.rho - ref.rho).cwiseAbs().maxCoeff() < 1e-6);
  for (Index i = 0; i < 3; ++i) {
    CHECK(oracle::vector_angle(m.w_x.col(i), ref.w_x.col(i)) < 1e-5);
  }
  opts.pca_retained = 4;
  const auto reduced = train_model(data, opts);
  CHECK(reduced.w_x.rows() == 10);
  CHECK(reduced.k() == 3);
}

TEST_CASE("property: linear invariance of correlations and score ranking") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 5; ++trial) {
    const Index dx = 6, dy = 5, n = 400;
    const auto train = correlated_data(dx, dy, n, 3, rng);
    Matrix tx = oracle::random_matrix(dx, dx, rng);
    tx.diagonal().array() += 4.0;
    Matrix ty = oracle::random_matrix(dy, dy, rng);
    ty.diagonal().array() += 4.0;
    CoupledDataset moved = train;
    moved.x_view = tx * train.x_view;
    moved.y_view = ty * train.y_view;

    SolverConfig cfg;
    cfg.alpha = 1e-12;
    cfg.k = 5;
    const auto a = solve_cca(compute_covariance_blocks(train), cfg);
    const auto b = solve_cca(compute_covariance_blocks(moved), cfg);
    CHECK((a.rho - b.rho).cwiseAbs().maxCoeff() <= 1e-5);

    const auto probe = correlated_data(dx, dy, 12, 3, rng);
    auto scores = [](const PairedSubspaceModel& m, const Matrix& g, const Matrix& p) {
      Matrix s(p.cols(), g.cols());
      for (Index i = 0; i < p.cols(); ++i)
        for (Index j = 0; j < g.cols(); ++j) {
          const Vector xh = m.w_x.transpose() * (g.col(j) - m.x_mean);
          const Vector yh = m.w_y.transpose() * (p.col(i) - m.y_mean);
          s(i, j) = oracle::cosine(xh, yh);
        }
      return s;
    };
    const Matrix s0 = scores(a, probe.x_view, probe.y_view);
    const Matrix s1 = scores(b, tx * probe.x_view, ty * probe.y_view);
    for (Index i = 0; i < s0.rows(); ++i) {
      std::vector<Index> order(static_cast<std::size_t>(s0.cols()));
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](Index l, Index r) { return s0(i, l) > s0(i, r); });
      for (std::size_t t = 0; t + 1 < order.size(); ++t) {
        const Index hi = order[t];
        const Index lo = order[t + 1];
        if (s0(i, hi) - s0(i, lo) > 1e-9) CHECK(s1(i, hi) > s1(i, lo));
      }
    }
  }
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::CCA, Method::PLS, Method::PCA}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
  CHECK(method_from_string("pls") == Method::PLS);
  CHECK(error_code_of([] { method_from_string("lda"); }) == Errc::InvalidArgument);
}
