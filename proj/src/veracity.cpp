#include "aggrekit/veracity.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace aggrekit::veracity {

Matrix SubspaceBasis::complement_projector() const {
  return Matrix::Identity(u.rows(), u.rows()) - u * u.transpose();
}

double SubspaceBasis::orthonormality_error() const {
  return (u.transpose() * u - Matrix::Identity(k, k)).norm();
}

double AnnealSchedule::shrink_factor() const {
  return std::pow(delta_final / delta0,
                  1.0 / (static_cast<double>(omega) - 1.0));
}

void AnnealSchedule::validate() const {
  if (!(delta0 > 0.0) || !(delta_final > 0.0)) {
    throw std::invalid_argument("anneal schedule: deltas must be positive");
  }
  if (omega < 2) throw std::invalid_argument("anneal schedule: omega must be >= 2");
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("anneal schedule: p must lie in (0, 1)");
  }
  if (inner_steps < 1) {
    throw std::invalid_argument("anneal schedule: inner_steps must be >= 1");
  }
}

double smoothed_penalty(const Matrix& residual, double delta, double p) {
  if (!(delta > 0.0) || !(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("smoothed_penalty: need delta > 0 and p in (0,1)");
  }
  const auto sq = residual.array().square() + delta;
  if (p == 0.5) {
    // (r^2 + delta)^(1/4) via two square roots; pow() dominates the solver
    // profile otherwise.
    return sq.sqrt().sqrt().sum();
  }
  return sq.pow(p / 2.0).sum();
}

double smoothed_penalty(const Matrix& residual, double delta, double p,
                        Matrix& gradient) {
  if (!(delta > 0.0) || !(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("smoothed_penalty: need delta > 0 and p in (0,1)");
  }
  const auto sq = (residual.array().square() + delta).eval();
  if (p == 0.5) {
    const auto s = sq.sqrt().eval();   // (r^2+d)^(1/2)
    const auto q = s.sqrt().eval();    // (r^2+d)^(1/4)
    gradient = (0.5 * residual.array() / (s * q)).matrix();
    return q.sum();
  }
  gradient = (p * residual.array() * sq.pow(p / 2.0 - 1.0)).matrix();
  return sq.pow(p / 2.0).sum();
}

namespace {

Matrix orthonormalize(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

// Top-k right singular vectors (sensor-space basis) of a dense matrix.
Matrix top_right_singular(const Matrix& m, Eigen::Index k) {
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinV);
  return svd.matrixV().leftCols(k);
}

struct MaskedData {
  Matrix observed;      // values with unobserved entries zeroed
  Matrix mask01;        // 1 observed / 0 unobserved; empty if fully observed
  bool full = true;
};

MaskedData split_mask(const data::TrafficMatrix& tm) {
  MaskedData md;
  md.full = tm.fully_observed();
  if (md.full) {
    md.observed = tm.values;
    return md;
  }
  md.mask01 = tm.mask->cast<double>().matrix();
  md.observed = tm.values.cwiseProduct(md.mask01);
  return md;
}

}  // namespace

SubspaceEstimate estimate_dominant_subspace(const data::TrafficMatrix& y_bar,
                                            Eigen::Index k,
                                            const AnnealSchedule& schedule) {
  schedule.validate();
  const Eigen::Index m = y_bar.rows();
  const Eigen::Index n = y_bar.cols();
  if (k < 1 || k > std::min(m, n)) {
    throw std::invalid_argument("estimate_dominant_subspace: bad rank");
  }
  if (!y_bar.fully_observed()) {
    for (Eigen::Index i = 0; i < m; ++i) {
      if (!y_bar.mask->row(i).any()) {
        throw data::DegenerateInputError("subspace: row with no observations");
      }
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!y_bar.mask->col(j).any()) {
        throw data::DegenerateInputError("subspace: column with no observations");
      }
    }
  }

  const MaskedData md = split_mask(y_bar);
  Matrix u = top_right_singular(md.observed, k);
  Matrix imputed = md.observed;  // zero-filled start, refined from L below

  SubspaceEstimate est;
  est.delta_trace.reserve(static_cast<std::size_t>(schedule.omega));
  const double shrink = schedule.shrink_factor();
  double delta = schedule.delta0;

  const auto masked_residual = [&](const Matrix& x) {
    if (md.full) return (md.observed - x).eval();
    return (md.observed - x).cwiseProduct(md.mask01).eval();
  };

  double step = 0.5;
  for (int outer = 0; outer < schedule.omega; ++outer) {
    est.delta_trace.push_back(delta);
    std::vector<double> trace;

    for (int inner = 0; inner < schedule.inner_steps; ++inner) {
      const Matrix projection = (imputed * u) * u.transpose();
      Matrix residual = masked_residual(projection);
      Matrix grad_pen;
      const double f0 = smoothed_penalty(residual, delta, schedule.p, grad_pen);
      if (!std::isfinite(f0)) {
        throw std::runtime_error(
            "estimate_dominant_subspace: non-finite objective (delta=" +
            std::to_string(delta) + ")");
      }
      if (trace.empty()) trace.push_back(f0);

      // d f / d U for f = h(mask o (Y - imputed U U^T)).
      const Matrix grad =
          -(imputed.transpose() * (grad_pen * u) + grad_pen.transpose() * (imputed * u));

      const double gnorm = grad.norm();
      if (gnorm == 0.0) break;

      double t = step;
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        const Matrix u_try = orthonormalize(u - t * grad);
        const Matrix r_try = masked_residual((imputed * u_try) * u_try.transpose());
        const double f_try = smoothed_penalty(r_try, delta, schedule.p);
        if (f_try <= f0) {
          u = u_try;
          trace.push_back(f_try);
          step = t * 2.0;  // optimistic restart for the next step
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) {
        // No descent direction at this smoothing level; move on.
        step = std::max(step * 0.5, 1e-12);
        break;
      }
    }

    est.max_orthonormality_error = std::max(
        est.max_orthonormality_error,
        (u.transpose() * u - Matrix::Identity(k, k)).norm());
    est.objective_trace.push_back(std::move(trace));

    // L <- projection of the imputed matrix, then refresh the imputation.
    const Matrix low_rank = (imputed * u) * u.transpose();
    if (!md.full) {
      imputed = md.observed + low_rank.cwiseProduct(
                                  (1.0 - md.mask01.array()).matrix());
    }
    est.low_rank = low_rank;
    delta *= shrink;
  }

  est.basis.u = std::move(u);
  est.basis.k = k;
  return est;
}

SubspaceBasis pca_subspace(const data::TrafficMatrix& y_bar, Eigen::Index k) {
  if (k < 1 || k > std::min(y_bar.rows(), y_bar.cols())) {
    throw std::invalid_argument("pca_subspace: bad rank");
  }
  const MaskedData md = split_mask(y_bar);  // baseline treats missing as zeros
  SubspaceBasis basis;
  basis.u = top_right_singular(md.observed, k);
  basis.k = k;
  return basis;
}

double variance_captured(const data::TrafficMatrix& y_bar, Eigen::Index k) {
  if (!y_bar.fully_observed()) {
    throw data::UnsupportedInputError("variance_captured: masked input");
  }
  if (k < 1 || k > std::min(y_bar.rows(), y_bar.cols())) {
    throw std::invalid_argument("variance_captured: bad rank");
  }
  Eigen::BDCSVD<Matrix> svd(y_bar.values);
  const auto sv = svd.singularValues();
  const double total = sv.squaredNorm();
  if (total == 0.0) return 0.0;
  return sv.head(k).squaredNorm() / total;
}

GainEstimate estimate_gain(const SubspaceBasis& basis,
                           const data::TrafficMatrix& y_bar,
                           const Vector& beta) {
  const Eigen::Index n = y_bar.cols();
  if (basis.u.rows() != n) {
    throw std::invalid_argument("estimate_gain: basis/sensor dimension mismatch");
  }
  if (basis.k >= n) {
    throw std::invalid_argument(
        "estimate_gain: complement projector is trivial (k >= sensor dim)");
  }
  if (beta.size() != n) {
    throw std::invalid_argument("estimate_gain: offset vector length mismatch");
  }

  // Gram form of the stacked system: sum_t diag(y_t) theta diag(y_t)
  // equals theta o (Y^T Y) elementwise. Its eigenvalues are the squared
  // singular values of the stacked constraint matrix.
  const Matrix theta = basis.complement_projector();
  const Matrix gram = theta.cwiseProduct(y_bar.values.transpose() * y_bar.values);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("estimate_gain: eigensolver failed");
  }

  GainEstimate result;
  result.sigma_min = std::sqrt(std::max(0.0, es.eigenvalues()(0)));
  result.sigma_next = std::sqrt(std::max(0.0, es.eigenvalues()(1)));
  if (result.sigma_next - result.sigma_min <= 1e-10) {
    throw AmbiguityError(
        "estimate_gain: smallest singular values coincide, gain not "
        "identifiable");
  }
  Vector alpha = es.eigenvectors().col(0);
  const double mean = alpha.mean();
  if (std::abs(mean) < 1e-12 * alpha.norm()) {
    throw AmbiguityError("estimate_gain: recovered gain has zero mean");
  }
  result.alpha = alpha / mean;  // fixes the sign and sets mean(alpha) = 1
  return result;
}

Matrix reconstruct_true_data(const data::TrafficMatrix& y, const Vector& alpha,
                             const Vector& beta,
                             const std::optional<Matrix>& fill) {
  const Eigen::Index n = y.cols();
  if (alpha.size() != n || beta.size() != n) {
    throw std::invalid_argument("reconstruct_true_data: dimension mismatch");
  }
  Matrix base = y.values;
  if (y.mask && fill) {
    base = y.mask->select(base, *fill);
  }
  Matrix z_hat(y.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    z_hat.col(j) = alpha(j) * base.col(j).array() + beta(j);
  }
  return z_hat;
}

double subspace_reconstruction_error(const SubspaceBasis& basis,
                                     const Matrix& y_est, const Matrix& y_bar,
                                     int* skipped) {
  if (y_est.rows() != y_bar.rows() || y_est.cols() != y_bar.cols() ||
      y_est.cols() != basis.u.rows()) {
    throw std::invalid_argument("subspace_reconstruction_error: shape mismatch");
  }
  const Matrix proj_est = y_est * basis.u;   // snapshot projections, per row
  const Matrix proj_ref = y_bar * basis.u;
  double sum = 0.0;
  int used = 0, skip = 0;
  for (Eigen::Index t = 0; t < proj_ref.rows(); ++t) {
    const double ref = proj_ref.row(t).norm();
    if (ref == 0.0) {
      ++skip;
      continue;
    }
    sum += (proj_est.row(t) - proj_ref.row(t)).norm() / ref;
    ++used;
  }
  if (skipped) *skipped = skip;
  return used > 0 ? sum / used : 0.0;
}

double true_data_error(const Matrix& z_hat, const Matrix& z, int* skipped) {
  if (z_hat.rows() != z.rows() || z_hat.cols() != z.cols()) {
    throw std::invalid_argument("true_data_error: shape mismatch");
  }
  double sum = 0.0;
  int used = 0, skip = 0;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double ref = z.col(j).norm();
    if (ref == 0.0) {
      ++skip;
      continue;
    }
    sum += (z_hat.col(j) - z.col(j)).norm() / ref;
    ++used;
  }
  if (skipped) *skipped = skip;
  return used > 0 ? sum / used : 0.0;
}

PipelineOutput run_pipeline(const data::TrafficMatrix& raw, const Vector& beta,
                            Eigen::Index k, const AnnealSchedule& schedule,
                            SubspaceMethod method) {
  const auto centered = data::center_columns(raw);

  PipelineOutput out;
  out.column_means = *centered.column_means;

  if (method == SubspaceMethod::kRobust) {
    auto est = estimate_dominant_subspace(centered, k, schedule);
    out.basis = std::move(est.basis);
    out.low_rank = std::move(est.low_rank);
  } else {
    out.basis = pca_subspace(centered, k);
    const MaskedData md = split_mask(centered);
    out.low_rank = (md.observed * out.basis.u) * out.basis.u.transpose();
  }

  // Gains are solved on the completed centered matrix.
  data::TrafficMatrix gain_input;
  gain_input.values = centered.values;
  if (centered.mask) {
    gain_input.values = centered.mask->select(centered.values, out.low_rank);
  }
  out.centered = gain_input.values;
  out.alpha = estimate_gain(out.basis, gain_input, beta).alpha;

  // Raw-domain completion for the unobserved entries: low-rank value plus
  // the column mean that centering removed.
  std::optional<Matrix> fill;
  if (raw.mask) {
    Matrix f = out.low_rank;
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
      f.col(j).array() += out.column_means(j);
    }
    fill = std::move(f);
  }
  out.z_hat = reconstruct_true_data(raw, out.alpha, beta, fill);
  return out;
}

}  // namespace aggrekit::veracity
