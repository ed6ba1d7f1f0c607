#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

#include "aggrekit/traffic_matrix.hpp"

// Robust dominant-subspace estimation and blind gain recovery.
//
// Matrices follow the project-wide layout: rows are time snapshots, columns
// are sensors. The dominant subspace therefore lives in sensor space: a
// basis U has one row per sensor and spans the space the snapshot vectors
// (matrix rows) lie in, and recovered gain vectors carry one entry per
// sensor.
namespace aggrekit::veracity {

using data::Matrix;
using data::Vector;

struct AmbiguityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SubspaceBasis {
  Matrix u;  // sensor_dim x k, orthonormal columns
  Eigen::Index k = 0;

  // theta = I - U U^T, the projector onto the complement of the subspace.
  Matrix complement_projector() const;
  double orthonormality_error() const;  // ||U^T U - I||_F
};

// Annealing schedule for the smoothed l_p penalty: delta shrinks
// geometrically from delta0 to delta_final over omega outer iterations with
// ratio Omega = (delta_final/delta0)^(1/(omega-1)).
struct AnnealSchedule {
  double delta0 = 1.0;
  double delta_final = 1e-6;
  int omega = 100;
  double p = 0.5;
  int inner_steps = 5;

  double shrink_factor() const;
  void validate() const;
};

struct CalibrationResult {
  Vector alpha;  // unit-mean normalized gains
  Vector beta;   // offsets, passed through (known per device)
  Matrix z_hat;  // reconstructed true-data matrix
};

// Smoothed sparsity surrogate sum_ij (r_ij^2 + delta)^(p/2) and its
// elementwise gradient p * r * (r^2 + delta)^(p/2 - 1).
double smoothed_penalty(const Matrix& residual, double delta, double p);
double smoothed_penalty(const Matrix& residual, double delta, double p,
                        Matrix& gradient);

struct SubspaceEstimate {
  SubspaceBasis basis;
  Matrix low_rank;  // L, same layout as the input
  // Objective values per outer iteration (one sequence per fixed delta).
  std::vector<std::vector<double>> objective_trace;
  std::vector<double> delta_trace;
  double max_orthonormality_error = 0.0;
};

// Alternating scheme: inner projected-gradient descent on U (QR retraction,
// backtracking line search), then L <- projection of the imputed matrix,
// then delta <- Omega * delta. Initialized from the SVD of the zero-filled
// observed matrix. Unobserved entries are re-imputed from the current L
// each outer iteration.
SubspaceEstimate estimate_dominant_subspace(const data::TrafficMatrix& y_bar,
                                            Eigen::Index k,
                                            const AnnealSchedule& schedule);

// Baseline: plain SVD of the zero-imputed matrix, top-k sensor-space basis.
SubspaceBasis pca_subspace(const data::TrafficMatrix& y_bar, Eigen::Index k);

// Fraction of total variance captured by the top-k singular directions.
double variance_captured(const data::TrafficMatrix& y_bar, Eigen::Index k);

struct GainEstimate {
  Vector alpha;
  double sigma_min = 0.0;   // smallest singular value of the stacked system
  double sigma_next = 0.0;  // second smallest, for the identifiability gap
};

// Blind gain recovery: stacks the per-snapshot constraints
// theta * diag(y_t) over all snapshots and takes the right singular vector
// of the smallest singular value, solved through the equivalent n x n Gram
// system theta o (Y^T Y). The result is sign-fixed and scaled to unit mean.
// Unobserved entries must be imputed by the caller beforehand; beta is the
// known offset vector and only participates through the centering already
// applied to y_bar.
GainEstimate estimate_gain(const SubspaceBasis& basis,
                           const data::TrafficMatrix& y_bar,
                           const Vector& beta);

// z_hat_j = alpha_j * y_j + beta_j per sensor column. When the raw matrix
// has unobserved entries they are taken from `fill` (a raw-domain low-rank
// completion) before scaling.
Matrix reconstruct_true_data(const data::TrafficMatrix& y, const Vector& alpha,
                             const Vector& beta,
                             const std::optional<Matrix>& fill = std::nullopt);

// Mean over snapshots of ||U^T y_est_t - U^T y_bar_t|| / ||U^T y_bar_t||.
// Zero-denominator snapshots are skipped and counted.
double subspace_reconstruction_error(const SubspaceBasis& basis,
                                     const Matrix& y_est, const Matrix& y_bar,
                                     int* skipped = nullptr);

// Mean over sensors of ||z_hat_j - z_j|| / ||z_j||, zero-norm reference
// columns skipped and counted.
double true_data_error(const Matrix& z_hat, const Matrix& z,
                       int* skipped = nullptr);

// --- Composed pipeline -----------------------------------------------------

enum class SubspaceMethod { kRobust, kPcaBaseline };

struct PipelineOutput {
  SubspaceBasis basis;
  Matrix low_rank;       // centered-domain completion
  Vector alpha;
  Matrix z_hat;
  Matrix centered;       // centered raw values (imputed)
  Vector column_means;
};

// Full Chapter-3 flow on a raw (possibly corrupted/masked) matrix: center,
// estimate the dominant subspace (robust or PCA baseline), recover gains
// against that basis, reconstruct the true-data estimate.
PipelineOutput run_pipeline(const data::TrafficMatrix& raw, const Vector& beta,
                            Eigen::Index k, const AnnealSchedule& schedule,
                            SubspaceMethod method);

}  // namespace aggrekit::veracity
