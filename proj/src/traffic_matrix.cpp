#include "aggrekit/traffic_matrix.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "aggrekit/rng.hpp"

namespace aggrekit::data {

void UncertaintySpec::validate() const {
  if (!(noise_std >= 0.0)) {
    throw std::invalid_argument("noise_std must be >= 0");
  }
  if (!(outlier_density >= 0.0 && outlier_density <= 1.0)) {
    throw std::invalid_argument("outlier_density must be in [0, 1]");
  }
  if (!(missing_fraction >= 0.0 && missing_fraction <= 1.0)) {
    throw std::invalid_argument("missing_fraction must be in [0, 1]");
  }
  if (outlier_lo > outlier_hi) {
    throw std::invalid_argument("outlier interval low must be <= high");
  }
}

std::pair<TrafficMatrix, GroundTruth> generate_synthetic(
    Eigen::Index m, Eigen::Index n, Eigen::Index k, std::uint64_t seed,
    CalibrationMode mode) {
  if (k < 1 || k > std::min(m, n)) {
    throw std::invalid_argument("generate_synthetic: rank k outside [1, min(m,n)]");
  }

  RandomStream factors(seed, StreamPurpose::kFactors);
  Matrix a(m, k);
  Matrix b(k, n);
  for (Eigen::Index j = 0; j < k; ++j)
    for (Eigen::Index i = 0; i < m; ++i) a(i, j) = factors.gaussian();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < k; ++i) b(i, j) = factors.gaussian();

  GroundTruth truth;
  // Scale keeps entry variance near 1 regardless of k.
  truth.low_rank = (a * b) / std::sqrt(static_cast<double>(k));
  truth.rank = k;
  truth.gains = Vector::Ones(n);
  truth.offsets = Vector::Zero(n);
  if (mode == CalibrationMode::kDrawn) {
    RandomStream gains(seed, StreamPurpose::kGains);
    RandomStream offsets(seed, StreamPurpose::kOffsets);
    for (Eigen::Index j = 0; j < n; ++j) truth.gains(j) = gains.uniform(0.5, 1.5);
    for (Eigen::Index j = 0; j < n; ++j) truth.offsets(j) = offsets.uniform(-0.5, 0.5);
  }

  TrafficMatrix raw;
  raw.values.resize(m, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    raw.values.col(j) =
        (truth.low_rank.col(j).array() - truth.offsets(j)) / truth.gains(j);
  }
  raw.provenance = Provenance::kRaw;
  return {std::move(raw), std::move(truth)};
}

TrafficMatrix corrupt(const TrafficMatrix& in, const UncertaintySpec& spec) {
  spec.validate();
  TrafficMatrix out = in;
  const Eigen::Index m = out.rows();
  const Eigen::Index n = out.cols();

  if (spec.noise_std > 0.0) {
    RandomStream noise(spec.seed, StreamPurpose::kNoise);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < m; ++i)
        out.values(i, j) += noise.gaussian(0.0, spec.noise_std);
  }

  if (spec.outlier_density > 0.0) {
    RandomStream outliers(spec.seed, StreamPurpose::kOutliers);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < m; ++i)
        if (outliers.bernoulli(spec.outlier_density))
          out.values(i, j) += outliers.uniform(spec.outlier_lo, spec.outlier_hi);
  }

  if (spec.missing_fraction > 0.0) {
    RandomStream maskstream(spec.seed, StreamPurpose::kMask);
    const auto total = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
    const auto holes = static_cast<std::size_t>(
        std::llround(spec.missing_fraction * static_cast<double>(total)));
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (!out.mask) out.mask = BoolArray::Constant(m, n, true);
    // Partial Fisher-Yates: the first `holes` slots are a uniform sample
    // without replacement.
    for (std::size_t i = 0; i < holes && i < total; ++i) {
      const std::size_t j = i + maskstream.index(total - i);
      std::swap(order[i], order[j]);
      const auto flat = order[i];
      (*out.mask)(static_cast<Eigen::Index>(flat % static_cast<std::size_t>(m)),
                  static_cast<Eigen::Index>(flat / static_cast<std::size_t>(m))) = false;
    }
  }
  return out;
}

TrafficMatrix center_columns(const TrafficMatrix& in) {
  TrafficMatrix out = in;
  const Eigen::Index m = out.rows();
  const Eigen::Index n = out.cols();
  Vector means(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double sum = 0.0;
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (out.observed(i, j)) {
        sum += out.values(i, j);
        ++count;
      }
    }
    if (count == 0) {
      throw DegenerateInputError("center_columns: column " + std::to_string(j) +
                                 " has no observed entries");
    }
    means(j) = sum / static_cast<double>(count);
    out.values.col(j).array() -= means(j);
  }
  out.column_means = std::move(means);
  out.provenance = Provenance::kCentered;
  return out;
}

TrafficMatrix uncenter_columns(const TrafficMatrix& in) {
  if (!in.column_means) {
    throw DegenerateInputError("uncenter_columns: no stored column means");
  }
  TrafficMatrix out = in;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    out.values.col(j).array() += (*out.column_means)(j);
  }
  out.column_means.reset();
  out.provenance = Provenance::kRaw;
  return out;
}

TrafficMatrix low_rank_truncate(const TrafficMatrix& in, Eigen::Index k) {
  if (!in.fully_observed()) {
    throw UnsupportedInputError("low_rank_truncate: input has observation holes");
  }
  if (k < 1 || k > std::min(in.rows(), in.cols())) {
    throw std::invalid_argument("low_rank_truncate: rank outside [1, min(m,n)]");
  }
  Eigen::BDCSVD<Matrix> svd(in.values, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TrafficMatrix out = in;
  out.values = svd.matrixU().leftCols(k) *
               svd.singularValues().head(k).asDiagonal() *
               svd.matrixV().leftCols(k).transpose();
  out.provenance = Provenance::kGroundTruthLowRank;
  return out;
}

}  // namespace aggrekit::data
