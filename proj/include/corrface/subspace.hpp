#pragma once

// Paired linear subspaces learned from identity-coupled two-view data.
//
// Conventions used throughout:
//   * samples are columns: x_view is d_x x n, y_view is d_y x n;
//   * covariances use the population divisor n;
//   * C*_xx = C_xx + alpha I, C*_yy = C_yy + alpha I;
//   * CCA bases are normalised so that W_x^T C*_xx W_x = I and likewise for y,
//     which makes both coupling scales equal to one;
//   * every basis pair is sign-fixed so the largest-magnitude entry of the
//     x-side column is positive (the y-side column is flipped with it so that
//     rho stays non-negative).

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace corrface {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Method { CCA, PLS, PCA };

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);

struct CoupledDataset {
  Matrix x_view;
  Matrix y_view;
  std::vector<std::string> subject_ids;
  std::pair<double, double> pose_labels{0.0, 0.0};

  Index size() const { return x_view.cols(); }

  // Throws EmptyDataset, NonFiniteInput or DimensionMismatch.
  void validate() const;
};

struct CovarianceBlocks {
  Matrix c_xx;
  Matrix c_yy;
  Matrix c_xy;
  Vector x_mean;
  Vector y_mean;
  Index n = 0;

  // Ridge already added to the diagonals of c_xx and c_yy.
  double ridge = 0.0;

  // Centred data scaled by 1/sqrt(n), so that c_xy = x_factor * y_factor^T.
  // Retained by compute_covariance_blocks; lets the solvers work in the data
  // span when n is much smaller than the feature dimension.
  std::optional<Matrix> x_factor;
  std::optional<Matrix> y_factor;

  Index x_dim() const { return c_xx.rows(); }
  Index y_dim() const { return c_yy.rows(); }
  Matrix c_yx() const { return c_xy.transpose(); }

  // The assembled (d_x + d_y) square block matrix.
  Matrix total() const;
};

struct SolverConfig {
  Method method = Method::CCA;
  double alpha = 1e-6;
  Index k = 1;
  double eigen_tolerance = 1e-10;
};

struct PairedSubspaceModel {
  Method method = Method::CCA;
  double alpha = 0.0;
  Matrix w_x;
  Matrix w_y;
  Vector rho;
  Vector x_mean;
  Vector y_mean;

  Index k_requested = 0;
  bool k_clamped = false;
  // Indices i where rho[i] and rho[i + 1] coincide within eigen_tolerance; the
  // individual vectors of a tied block are not unique, only their span is.
  std::vector<Index> ties;
  std::string region;

  Index k() const { return rho.size(); }
  Index x_dim() const { return w_x.rows(); }
  Index y_dim() const { return w_y.rows(); }
};

// Stacked form B^-1 A w = rho w shared by CCA, PLS and PCA.
struct UnifiedEigenProblem {
  Matrix a_matrix;
  Matrix b_matrix;
  Index x_dim = 0;
  Index y_dim = 0;
};

CovarianceBlocks compute_covariance_blocks(const CoupledDataset& data);

CovarianceBlocks regularize(const CovarianceBlocks& blocks, double alpha);

PairedSubspaceModel solve_cca(const CovarianceBlocks& blocks,
                              const SolverConfig& config);

// Partial least squares: singular structure of C_xy, unit-norm bases.
PairedSubspaceModel solve_pls(const CovarianceBlocks& blocks,
                              const SolverConfig& config);

// Principal components of the x view; the y side of the model is empty.
PairedSubspaceModel solve_pca(const CovarianceBlocks& blocks,
                              const SolverConfig& config);

// Dispatches on config.method to the direct solvers above.
PairedSubspaceModel solve(const CovarianceBlocks& blocks,
                          const SolverConfig& config);

UnifiedEigenProblem make_unified_problem(const CovarianceBlocks& blocks,
                                         Method method, double alpha);

// Solves the stacked generalized eigenproblem directly. Dense in
// (d_x + d_y), so intended for cross-validation on moderate dimensions.
PairedSubspaceModel solve_unified(const CovarianceBlocks& blocks,
                                  const SolverConfig& config);

struct PcaProjection {
  Matrix basis;  // d x retained, orthonormal columns
  Vector mean;
  Vector variances;

  Vector project(const Vector& v) const;
  Vector reconstruct(const Vector& coords) const;
  Matrix project_columns(const Matrix& m) const;
};

struct PcaWhitenResult {
  CoupledDataset data;
  PcaProjection x_projection;
  PcaProjection y_projection;
};

// Independently projects each view onto its top principal components.
// Coordinates are not rescaled: the projected covariance is diagonal.
PcaWhitenResult pca_whiten(const CoupledDataset& data, Index retained);

struct TrainingOptions {
  SolverConfig solver;
  std::optional<Index> pca_retained;  // PCA before CCA; off by default
};

// compute_covariance_blocks + solve, with the optional PCA stage folded back
// into the returned bases so the model lives in the original feature space.
PairedSubspaceModel train_model(const CoupledDataset& data,
                                const TrainingOptions& options);

}  // namespace corrface
