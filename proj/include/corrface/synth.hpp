#pragma once

// Synthetic identity-coupled data with known ground truth.

#include "corrface/features.hpp"
#include "corrface/pose_data.hpp"
#include "corrface/subspace.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace corrface {

// x = A_x z + B_x u_x + noise, y = A_y z + B_y u_y + noise, with z ~ N(0, I_q)
// drawn once per subject and u (nuisance) drawn per image. A share of each
// y sample's coordinates is overwritten by identity-independent noise.
struct GenerativeSpec {
  Index latent_dim = 8;
  Index x_dim = 50;
  Index y_dim = 40;
  Index n_train_subjects = 100;
  Index n_test_subjects = 100;
  Index images_per_subject_per_view = 1;
  double noise_sigma = 0.3;
  double occlusion_fraction = 0.0;
  Index nuisance_dim = 0;
  double nuisance_scale = 1.0;
  // Explicit view maps (d x q); random Gaussian maps when absent.
  std::optional<Matrix> a_x;
  std::optional<Matrix> a_y;
  std::uint64_t seed = 0;

  // Throws InvalidSpec.
  void validate() const;
};

struct GenerativeTruth {
  Matrix a_x;
  Matrix a_y;
  Matrix train_latent;  // q x n_train_subjects
  Matrix test_latent;
};

struct CoupledSplit {
  CoupledDataset train;
  CoupledDataset test;
  GenerativeTruth truth;
};

// Column j of a split pairs image j of the x view with image j of the y view;
// train and test subjects are disjoint ("s0000".. then test ids continue).
CoupledSplit generate_coupled(const GenerativeSpec& spec);

// Multi-region, multi-pose family on a shared latent identity. Region r at
// pose theta uses A_r(theta) = cos(t) A_r0 + sin(t) A_r1 with
// t = mixing_rate * theta (radians), so the maps drift smoothly with pose.
// Occlusion at pose theta is occlusion_fraction * |theta| / max |pose|.
struct PoseFamilySpec {
  Index latent_dim = 8;
  Index holistic_dim = 50;
  Index local_dim = 20;
  std::vector<double> poses_deg{0.0, 30.0};
  Index n_train_subjects = 100;
  Index n_test_subjects = 100;
  Index images_per_subject_per_pose = 2;
  double noise_sigma = 0.3;
  double occlusion_fraction = 0.2;
  Index nuisance_dim = 4;
  double nuisance_scale = 1.0;
  double mixing_rate = 1.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PoseSplit {
  PoseDataset train;
  PoseDataset test;
};

// Regions are "holistic" followed by the five landmark names.
PoseSplit generate_pose_family(const PoseFamilySpec& spec);

// Cartoon faces under a cylindrical yaw warp plus a small per-image
// similarity jitter. Per-image variation (jitter, illumination, pixel noise)
// depends on (subject, image) only, so two poses with the same warp render
// identically. Occlusion blocks appear only on non-frontal poses.
struct SyntheticRasterSpec {
  int width = 160;
  int height = 200;
  int n_subjects = 30;
  std::vector<double> poses_deg{0.0, 30.0};
  int images_per_subject_per_pose = 1;
  double yaw_gain = 1.0;   // cylinder rotation = yaw_gain * pose
  double jitter_deg = 3.0;
  double jitter_scale = 0.04;
  double jitter_shift = 3.0;
  double illumination = 0.08;
  double noise_sigma = 0.02;
  double occlusion_fraction = 0.0;
  int first_subject = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<FaceSample> generate_rasters(const SyntheticRasterSpec& spec);

std::string subject_name(Index index);

}  // namespace corrface
