#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>

namespace aggrekit::data {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Thrown when an operation meets input it cannot make sense of (e.g. a
// fully masked column during centering).
struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an operation is asked to run on input it explicitly does not
// support (e.g. SVD truncation of a matrix with observation holes).
struct UnsupportedInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Provenance { kRaw, kCentered, kGroundTruthLowRank };

// Sensor data traffic matrix. Rows are samples/snapshots in time order,
// columns are devices/sensors. Missing observations are carried in an
// explicit mask (true = observed) rather than sentinel values, so all
// arithmetic on `values` stays well defined.
struct TrafficMatrix {
  Matrix values;
  std::optional<BoolArray> mask;
  std::optional<Vector> column_means;  // set by center_columns
  Provenance provenance = Provenance::kRaw;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  bool observed(Eigen::Index i, Eigen::Index j) const {
    return !mask || (*mask)(i, j);
  }

  bool fully_observed() const { return !mask || mask->all(); }

  Eigen::Index masked_count() const {
    if (!mask) return 0;
    return mask->size() - mask->count();
  }
};

// Rank-k "true sensor data" Z together with the per-sensor calibration that
// produced the raw matrix from it. gains/offsets have one entry per sensor
// (column).
struct GroundTruth {
  Matrix low_rank;
  Vector gains;
  Vector offsets;
  Eigen::Index rank = 0;
};

struct UncertaintySpec {
  double noise_std = 0.0;
  double outlier_density = 0.0;
  double outlier_lo = 0.0;
  double outlier_hi = 0.0;
  double missing_fraction = 0.0;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

enum class CalibrationMode {
  kDrawn,     // gains ~ U[0.5, 1.5], offsets ~ U[-0.5, 0.5]
  kIdentity,  // gains = 1, offsets = 0
};

// Builds a rank-k ground-truth matrix Z (m samples x n sensors) and the raw
// matrix observed through per-sensor calibration: y_j = (z_j - beta_j) /
// alpha_j column-wise. Deterministic in `seed`.
std::pair<TrafficMatrix, GroundTruth> generate_synthetic(
    Eigen::Index m, Eigen::Index n, Eigen::Index k, std::uint64_t seed,
    CalibrationMode mode = CalibrationMode::kDrawn);

// Applies, in order: dense Gaussian noise, additive uniform outliers on a
// Bernoulli(outlier_density) support, and exactly round(missing_fraction *
// m * n) masked entries. Each channel draws from its own substream of
// spec.seed, so enabling one never shifts the draws of another.
TrafficMatrix corrupt(const TrafficMatrix& in, const UncertaintySpec& spec);

// Subtracts the observed mean of every column and records the means.
TrafficMatrix center_columns(const TrafficMatrix& in);

// Inverse of center_columns via the stored means.
TrafficMatrix uncenter_columns(const TrafficMatrix& in);

// Recomposes the SVD with singular values beyond index k zeroed. Requires a
// fully observed matrix.
TrafficMatrix low_rank_truncate(const TrafficMatrix& in, Eigen::Index k);

}  // namespace aggrekit::data
