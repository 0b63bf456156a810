#include "corrface/subspace.hpp"

#include "corrface/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace corrface {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::CCA: return "CCA";
    case Method::PLS: return "PLS";
    case Method::PCA: return "PCA";
  }
  return "CCA";
}

Method method_from_string(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "CCA") return Method::CCA;
  if (upper == "PLS") return Method::PLS;
  if (upper == "PCA") return Method::PCA;
  throw Error(Errc::InvalidArgument, "unknown method '" + std::string(name) + "'");
}

namespace {

// Returns the index of the first column holding a NaN or Inf, or -1.
Index first_non_finite_column(const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    if (!m.col(j).allFinite()) return j;
  }
  return -1;
}

void symmetrize(Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = j + 1; i < m.rows(); ++i) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = v;
      m(j, i) = v;
    }
  }
}

// The solvers take raw blocks or blocks regularized with exactly config.alpha.
double ridge_to_add(const CovarianceBlocks& blocks, double alpha) {
  if (!(alpha >= 0.0)) {
    throw Error(Errc::NegativeAlpha, "alpha must be non-negative");
  }
  if (blocks.ridge == 0.0) return alpha;
  if (blocks.ridge == alpha) return 0.0;
  std::ostringstream msg;
  msg << "blocks already regularized with alpha=" << blocks.ridge
      << " but solver requested alpha=" << alpha;
  throw Error(Errc::InvalidArgument, msg.str());
}

Index clamp_k(Index requested, Index limit) {
  if (requested < 1) {
    throw Error(Errc::InvalidArgument, "k must be at least 1");
  }
  if (limit < 1) {
    throw Error(Errc::EmptyDataset, "no basis pairs available (need n >= 2)");
  }
  return std::min(requested, limit);
}

// A view expressed in an orthonormal frame. When the sample count is smaller
// than the dimension, the frame is the span of the centred data and the
// covariance is n x n; otherwise the frame is the identity.
struct ViewFrame {
  Matrix basis;   // d x m, empty for the identity frame
  Matrix cov;     // m x m, regularized
  Matrix factor;  // m x n, empty when no data factor is available

  bool compressed() const { return basis.size() > 0; }

  Matrix lift(const Matrix& coords) const {
    return compressed() ? Matrix(basis * coords) : coords;
  }
};

ViewFrame make_frame(const Matrix& cov, const std::optional<Matrix>& factor,
                     double add_ridge, double total_ridge) {
  ViewFrame frame;
  if (factor && factor->cols() < factor->rows()) {
    const Index d = factor->rows();
    const Index n = factor->cols();
    Eigen::HouseholderQR<Matrix> qr(*factor);
    frame.basis = qr.householderQ() * Matrix::Identity(d, n);
    frame.factor = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    frame.cov = frame.factor * frame.factor.transpose();
    symmetrize(frame.cov);
    frame.cov.diagonal().array() += total_ridge;
    return frame;
  }
  frame.cov = cov;
  frame.cov.diagonal().array() += add_ridge;
  if (factor) frame.factor = *factor;
  return frame;
}

Matrix frame_cross(const CovarianceBlocks& blocks, const ViewFrame& fx,
                   const ViewFrame& fy) {
  if (!fx.compressed() && !fy.compressed()) return blocks.c_xy;
  return fx.factor * fy.factor.transpose();
}

Eigen::LLT<Matrix> factor_covariance(const Matrix& cov, double total_ridge,
                                     const char* view) {
  Eigen::LLT<Matrix> llt(cov);
  bool singular = llt.info() != Eigen::Success;
  if (!singular && total_ridge == 0.0 && cov.rows() > 0) {
    const Vector pivots = llt.matrixLLT().diagonal();
    const double max_diag = cov.diagonal().maxCoeff();
    const double min_pivot = pivots.minCoeff();
    singular = !(min_pivot * min_pivot > 1e-10 * max_diag);
  }
  if (singular) {
    throw Error(Errc::SingularCovariance,
                std::string("covariance of the ") + view +
                    " view is singular; raise alpha above zero");
  }
  return llt;
}

template <typename SVD>
void thin_svd(const Matrix& m, Matrix& u, Matrix& v, Vector& s) {
  SVD svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  u = svd.matrixU();
  v = svd.matrixV();
  s = svd.singularValues();
}

void svd_of(const Matrix& m, Matrix& u, Matrix& v, Vector& s) {
  if (std::min(m.rows(), m.cols()) <= 128) {
    thin_svd<Eigen::JacobiSVD<Matrix>>(m, u, v, s);
  } else {
    thin_svd<Eigen::BDCSVD<Matrix>>(m, u, v, s);
  }
}

void fix_signs(Matrix& wx, Matrix& wy) {
  for (Index j = 0; j < wx.cols(); ++j) {
    Index arg = 0;
    wx.col(j).cwiseAbs().maxCoeff(&arg);
    if (wx(arg, j) < 0.0) {
      wx.col(j) = -wx.col(j);
      if (wy.cols() > j) wy.col(j) = -wy.col(j);
    }
  }
}

std::vector<Index> find_ties(const Vector& rho, double tolerance) {
  std::vector<Index> ties;
  if (rho.size() < 2) return ties;
  const double scale = std::max(1.0, std::abs(rho(0)));
  for (Index i = 0; i + 1 < rho.size(); ++i) {
    if (std::abs(rho(i) - rho(i + 1)) <= tolerance * scale) ties.push_back(i);
  }
  return ties;
}

PairedSubspaceModel finish_model(Method method, double alpha,
                                 const CovarianceBlocks& blocks,
                                 const SolverConfig& config, Matrix wx,
                                 Matrix wy, Vector rho) {
  fix_signs(wx, wy);
  PairedSubspaceModel model;
  model.method = method;
  model.alpha = alpha;
  model.w_x = std::move(wx);
  model.w_y = std::move(wy);
  model.rho = std::move(rho);
  model.x_mean = blocks.x_mean;
  model.y_mean = method == Method::PCA ? Vector() : blocks.y_mean;
  model.k_requested = config.k;
  model.k_clamped = model.rho.size() < config.k;
  model.ties = find_ties(model.rho, config.eigen_tolerance);
  return model;
}

void check_blocks(const CovarianceBlocks& blocks, bool needs_y) {
  if (blocks.n < 2) {
    throw Error(Errc::EmptyDataset, "covariance blocks need n >= 2 samples");
  }
  if (blocks.c_xx.rows() != blocks.c_xx.cols() ||
      blocks.x_mean.size() != blocks.c_xx.rows()) {
    throw Error(Errc::DimensionMismatch, "c_xx / x_mean shapes disagree");
  }
  if (!needs_y) return;
  if (blocks.c_yy.rows() != blocks.c_yy.cols() ||
      blocks.y_mean.size() != blocks.c_yy.rows() ||
      blocks.c_xy.rows() != blocks.c_xx.rows() ||
      blocks.c_xy.cols() != blocks.c_yy.rows()) {
    throw Error(Errc::DimensionMismatch, "covariance block shapes disagree");
  }
}

}  // namespace

void CoupledDataset::validate() const {
  if (x_view.cols() != y_view.cols()) {
    throw Error(Errc::DimensionMismatch,
                "x_view and y_view must have the same number of columns");
  }
  if (x_view.cols() < 2) {
    throw Error(Errc::EmptyDataset, "coupled dataset needs at least 2 samples");
  }
  if (!subject_ids.empty() &&
      static_cast<Index>(subject_ids.size()) != x_view.cols()) {
    throw Error(Errc::DimensionMismatch,
                "subject_ids must have one entry per column");
  }
  if (const Index j = first_non_finite_column(x_view); j >= 0) {
    throw Error(Errc::NonFiniteInput,
                "non-finite value in column " + std::to_string(j) + " of x_view");
  }
  if (const Index j = first_non_finite_column(y_view); j >= 0) {
    throw Error(Errc::NonFiniteInput,
                "non-finite value in column " + std::to_string(j) + " of y_view");
  }
}

Matrix CovarianceBlocks::total() const {
  const Index dx = x_dim();
  const Index dy = y_dim();
  Matrix t(dx + dy, dx + dy);
  t.topLeftCorner(dx, dx) = c_xx;
  t.topRightCorner(dx, dy) = c_xy;
  t.bottomLeftCorner(dy, dx) = c_xy.transpose();
  t.bottomRightCorner(dy, dy) = c_yy;
  return t;
}

CovarianceBlocks compute_covariance_blocks(const CoupledDataset& data) {
  data.validate();
  const Index n = data.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));

  CovarianceBlocks blocks;
  blocks.n = n;
  blocks.x_mean = data.x_view.rowwise().mean();
  blocks.y_mean = data.y_view.rowwise().mean();
  Matrix fx = (data.x_view.colwise() - blocks.x_mean) * scale;
  Matrix fy = (data.y_view.colwise() - blocks.y_mean) * scale;

  blocks.c_xx = fx * fx.transpose();
  blocks.c_yy = fy * fy.transpose();
  blocks.c_xy = fx * fy.transpose();
  symmetrize(blocks.c_xx);
  symmetrize(blocks.c_yy);
  blocks.x_factor = std::move(fx);
  blocks.y_factor = std::move(fy);
  return blocks;
}

CovarianceBlocks regularize(const CovarianceBlocks& blocks, double alpha) {
  if (!(alpha >= 0.0)) {
    throw Error(Errc::NegativeAlpha, "alpha must be non-negative");
  }
  CovarianceBlocks out = blocks;
  if (alpha == 0.0) return out;
  out.c_xx.diagonal().array() += alpha;
  out.c_yy.diagonal().array() += alpha;
  out.ridge += alpha;
  return out;
}

PairedSubspaceModel solve_cca(const CovarianceBlocks& blocks,
                              const SolverConfig& config) {
  if (config.method != Method::CCA) {
    throw Error(Errc::InvalidArgument, "solve_cca requires method CCA");
  }
  check_blocks(blocks, true);
  const double add = ridge_to_add(blocks, config.alpha);
  const double total = config.alpha;
  const Index k = clamp_k(
      config.k, std::min({blocks.x_dim(), blocks.y_dim(), blocks.n - 1}));

  const ViewFrame fx = make_frame(blocks.c_xx, blocks.x_factor, add, total);
  const ViewFrame fy = make_frame(blocks.c_yy, blocks.y_factor, add, total);
  const auto lx = factor_covariance(fx.cov, total, "x");
  const auto ly = factor_covariance(fy.cov, total, "y");

  // Whitened cross-covariance L_x^-1 C_xy L_y^-T.
  const Matrix t = lx.matrixL().solve(frame_cross(blocks, fx, fy));
  const Matrix whitened = ly.matrixL().solve(t.transpose()).transpose();

  Matrix u, v;
  Vector s;
  svd_of(whitened, u, v, s);

  Matrix wx = fx.lift(lx.matrixU().solve(u.leftCols(k)));
  Matrix wy = fy.lift(ly.matrixU().solve(v.leftCols(k)));
  return finish_model(Method::CCA, config.alpha, blocks, config, std::move(wx),
                      std::move(wy), s.head(k));
}

PairedSubspaceModel solve_pls(const CovarianceBlocks& blocks,
                              const SolverConfig& config) {
  if (config.method != Method::PLS) {
    throw Error(Errc::InvalidArgument, "solve_pls requires method PLS");
  }
  check_blocks(blocks, true);
  ridge_to_add(blocks, config.alpha);
  const Index k = clamp_k(
      config.k, std::min({blocks.x_dim(), blocks.y_dim(), blocks.n - 1}));

  const ViewFrame fx = make_frame(blocks.c_xx, blocks.x_factor, 0.0, 0.0);
  const ViewFrame fy = make_frame(blocks.c_yy, blocks.y_factor, 0.0, 0.0);
  Matrix u, v;
  Vector s;
  svd_of(frame_cross(blocks, fx, fy), u, v, s);

  Matrix wx = fx.lift(u.leftCols(k));
  Matrix wy = fy.lift(v.leftCols(k));
  return finish_model(Method::PLS, config.alpha, blocks, config, std::move(wx),
                      std::move(wy), s.head(k));
}

PairedSubspaceModel solve_pca(const CovarianceBlocks& blocks,
                              const SolverConfig& config) {
  if (config.method != Method::PCA) {
    throw Error(Errc::InvalidArgument, "solve_pca requires method PCA");
  }
  check_blocks(blocks, false);
  ridge_to_add(blocks, config.alpha);
  const Index d = blocks.x_dim();
  const Index k = clamp_k(config.k, std::min(d, blocks.n - 1));

  Matrix basis;
  Vector values;
  if (blocks.x_factor && blocks.x_factor->cols() < d) {
    Matrix u, v;
    Vector s;
    svd_of(*blocks.x_factor, u, v, s);
    basis = u.leftCols(k);
    values = s.head(k).array().square() + blocks.ridge;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(blocks.c_xx);
    basis = eig.eigenvectors().rowwise().reverse().leftCols(k);
    values = eig.eigenvalues().reverse().head(k);
  }
  Matrix empty(blocks.y_dim(), 0);
  return finish_model(Method::PCA, config.alpha, blocks, config,
                      std::move(basis), std::move(empty), std::move(values));
}

PairedSubspaceModel solve(const CovarianceBlocks& blocks,
                          const SolverConfig& config) {
  switch (config.method) {
    case Method::CCA: return solve_cca(blocks, config);
    case Method::PLS: return solve_pls(blocks, config);
    case Method::PCA: return solve_pca(blocks, config);
  }
  throw Error(Errc::InvalidArgument, "unknown method");
}

UnifiedEigenProblem make_unified_problem(const CovarianceBlocks& blocks,
                                         Method method, double alpha) {
  UnifiedEigenProblem problem;
  problem.x_dim = blocks.x_dim();
  if (method == Method::PCA) {
    problem.a_matrix = blocks.c_xx;
    problem.b_matrix = Matrix::Identity(problem.x_dim, problem.x_dim);
    return problem;
  }
  problem.y_dim = blocks.y_dim();
  const Index dx = problem.x_dim;
  const Index dy = problem.y_dim;
  problem.a_matrix = Matrix::Zero(dx + dy, dx + dy);
  problem.a_matrix.topRightCorner(dx, dy) = blocks.c_xy;
  problem.a_matrix.bottomLeftCorner(dy, dx) = blocks.c_xy.transpose();
  if (method == Method::PLS) {
    problem.b_matrix = Matrix::Identity(dx + dy, dx + dy);
    return problem;
  }
  const double add = ridge_to_add(blocks, alpha);
  problem.b_matrix = Matrix::Zero(dx + dy, dx + dy);
  problem.b_matrix.topLeftCorner(dx, dx) = blocks.c_xx;
  problem.b_matrix.bottomRightCorner(dy, dy) = blocks.c_yy;
  problem.b_matrix.diagonal().array() += add;
  return problem;
}

PairedSubspaceModel solve_unified(const CovarianceBlocks& blocks,
                                  const SolverConfig& config) {
  const Method method = config.method;
  check_blocks(blocks, method != Method::PCA);
  ridge_to_add(blocks, config.alpha);
  const UnifiedEigenProblem problem =
      make_unified_problem(blocks, method, config.alpha);
  const Index dx = problem.x_dim;
  const Index dy = problem.y_dim;

  if (method == Method::PCA) {
    const Index k = clamp_k(config.k, std::min(dx, blocks.n - 1));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(problem.a_matrix);
    Matrix basis = eig.eigenvectors().rowwise().reverse().leftCols(k);
    Vector values = eig.eigenvalues().reverse().head(k);
    return finish_model(method, config.alpha, blocks, config, std::move(basis),
                        Matrix(blocks.y_dim(), 0), std::move(values));
  }

  const Index k = clamp_k(config.k, std::min({dx, dy, blocks.n - 1}));
  Vector values;
  Matrix vectors;
  Matrix cxx_star;
  Matrix cyy_star;
  if (method == Method::CCA) {
    cxx_star = problem.b_matrix.topLeftCorner(dx, dx);
    cyy_star = problem.b_matrix.bottomRightCorner(dy, dy);
    factor_covariance(cxx_star, config.alpha, "x");
    factor_covariance(cyy_star, config.alpha, "y");
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(
        problem.a_matrix, problem.b_matrix,
        Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    values = eig.eigenvalues();
    vectors = eig.eigenvectors();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(problem.a_matrix);
    values = eig.eigenvalues();
    vectors = eig.eigenvectors();
  }

  // Eigenvalues come in +/- rho pairs; the top k are the retained pairs.
  const Index total = values.size();
  Matrix wx(dx, k);
  Matrix wy(dy, k);
  Vector rho(k);
  for (Index i = 0; i < k; ++i) {
    const Index src = total - 1 - i;
    rho(i) = values(src);
    Vector ax = vectors.col(src).head(dx);
    Vector ay = vectors.col(src).tail(dy);
    if (method == Method::CCA) {
      ax /= std::sqrt(ax.dot(cxx_star * ax));
      ay /= std::sqrt(ay.dot(cyy_star * ay));
    } else {
      ax.normalize();
      ay.normalize();
    }
    wx.col(i) = ax;
    wy.col(i) = ay;
  }
  return finish_model(method, config.alpha, blocks, config, std::move(wx),
                      std::move(wy), std::move(rho));
}

Vector PcaProjection::project(const Vector& v) const {
  return basis.transpose() * (v - mean);
}

Vector PcaProjection::reconstruct(const Vector& coords) const {
  return basis * coords + mean;
}

Matrix PcaProjection::project_columns(const Matrix& m) const {
  return basis.transpose() * (m.colwise() - mean);
}

namespace {

PcaProjection fit_pca(const Matrix& view, Index retained) {
  const Index n = view.cols();
  PcaProjection proj;
  proj.mean = view.rowwise().mean();
  const Matrix centred = view.colwise() - proj.mean;
  Matrix u, v;
  Vector s;
  svd_of(centred, u, v, s);
  proj.basis = u.leftCols(retained);
  proj.variances = s.head(retained).array().square() / static_cast<double>(n);
  Matrix none(0, retained);
  fix_signs(proj.basis, none);
  return proj;
}

}  // namespace

PcaWhitenResult pca_whiten(const CoupledDataset& data, Index retained) {
  data.validate();
  const Index n = data.size();
  const Index limit =
      std::min({data.x_view.rows(), data.y_view.rows(), n - 1});
  if (retained < 1 || retained > limit) {
    throw Error(Errc::RetainedTooLarge,
                "retained=" + std::to_string(retained) +
                    " exceeds min(d, n-1)=" + std::to_string(limit));
  }
  PcaWhitenResult result;
  result.x_projection = fit_pca(data.x_view, retained);
  result.y_projection = fit_pca(data.y_view, retained);
  result.data.x_view = result.x_projection.project_columns(data.x_view);
  result.data.y_view = result.y_projection.project_columns(data.y_view);
  result.data.subject_ids = data.subject_ids;
  result.data.pose_labels = data.pose_labels;
  return result;
}

PairedSubspaceModel train_model(const CoupledDataset& data,
                                const TrainingOptions& options) {
  if (!options.pca_retained) {
    return solve(compute_covariance_blocks(data), options.solver);
  }
  const PcaWhitenResult reduced = pca_whiten(data, *options.pca_retained);
  PairedSubspaceModel model =
      solve(compute_covariance_blocks(reduced.data), options.solver);
  model.w_x = reduced.x_projection.basis * model.w_x;
  model.x_mean = reduced.x_projection.mean;
  if (model.method != Method::PCA) {
    model.w_y = reduced.y_projection.basis * model.w_y;
    model.y_mean = reduced.y_projection.mean;
  } else {
    model.w_y = Matrix(data.y_view.rows(), 0);
  }
  return model;
}

}  // namespace corrface
