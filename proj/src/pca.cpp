#include <algorithm>
#include <cmath>
#include <type_traits>

#include <Eigen/Eigenvalues>

#include "loggrouper/error.hpp"
#include "loggrouper/vectorize.hpp"

namespace loggrouper {
namespace {

// Flips each row so its largest-magnitude entry (first on ties) is >= 0.
void apply_sign_convention(Matrix& components) {
  for (Eigen::Index r = 0; r < components.rows(); ++r) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index c = 0; c < components.cols(); ++c) {
      const double a = std::abs(components(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = c;
      }
    }
    if (components(r, best) < 0.0) components.row(r) *= -1.0;
  }
}

Eigen::Index choose_rank(const std::vector<double>& eigenvalues_desc, double total,
                         const PcaOptions& options, Eigen::Index cap) {
  const double floor = eigenvalues_desc.empty() ? 0.0 : eigenvalues_desc.front() * 1e-12;
  double cumulative = 0.0;
  Eigen::Index k = 0;
  for (double lambda : eigenvalues_desc) {
    if (k >= cap || lambda <= floor) break;
    cumulative += lambda;
    ++k;
    if (cumulative >= options.variance_target * total * (1.0 - 1e-12)) break;
  }
  // Any split of a block of equal eigenvalues is an arbitrary basis choice,
  // so a tied block is kept whole.
  const auto size = static_cast<Eigen::Index>(eigenvalues_desc.size());
  while (k > 0 && k < cap && k < size && eigenvalues_desc[k] > floor &&
         eigenvalues_desc[k] >= eigenvalues_desc[k - 1] * (1.0 - 1e-9))
    ++k;
  return std::max<Eigen::Index>(k, 1);
}

template <typename Data>
PcaModel fit_impl(const Data& x, const PcaOptions& options) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "PCA needs at least two rows");
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "PCA needs at least one column");
  if (!(options.variance_target > 0.0 && options.variance_target <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "variance target must lie in (0, 1]");
  if (options.max_components < 1)
    throw Error(ErrorCode::InvalidArgument, "max_components must be positive");

  PcaModel model;
  const Vector ones = Vector::Ones(n);
  model.mean = (x.transpose() * ones) / static_cast<double>(n);

  bool use_gram = d > n;
  if (options.route == PcaOptions::Route::Covariance) use_gram = false;
  if (options.route == PcaOptions::Route::Gram) use_gram = true;

  // Population variance: total_variance * n is the total squared deviation.
  const double dof = static_cast<double>(n);
  std::vector<double> eigenvalues;  // covariance eigenvalues, descending
  Matrix basis;                     // d x m eigenvectors, matching order

  if (!use_gram) {
    Matrix scatter;
    if constexpr (std::is_base_of_v<Eigen::SparseMatrixBase<Data>, Data>) {
      scatter = Matrix(x.transpose() * x);
      scatter -= static_cast<double>(n) * model.mean * model.mean.transpose();
    } else {
      const Matrix centered = x.rowwise() - model.mean.transpose();
      scatter = centered.transpose() * centered;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(scatter / dof);
    if (solver.info() != Eigen::Success)
      throw Error(ErrorCode::Internal, "covariance eigendecomposition failed");
    basis.resize(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      eigenvalues.push_back(std::max(0.0, solver.eigenvalues()(d - 1 - i)));
      basis.col(i) = solver.eigenvectors().col(d - 1 - i);
    }
  } else {
    Matrix gram;
    if constexpr (std::is_base_of_v<Eigen::SparseMatrixBase<Data>, Data>) {
      gram = Matrix(x * x.transpose());
      const Vector proj = x * model.mean;
      gram -= proj * ones.transpose() + ones * proj.transpose();
      gram.array() += model.mean.squaredNorm();
    } else {
      const Matrix centered = x.rowwise() - model.mean.transpose();
      gram = centered * centered.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
    if (solver.info() != Eigen::Success)
      throw Error(ErrorCode::Internal, "Gram eigendecomposition failed");
    const Eigen::Index m = std::min(n, d);
    basis.resize(d, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double s2 = std::max(0.0, solver.eigenvalues()(n - 1 - i));
      eigenvalues.push_back(s2 / dof);
      const Vector u = solver.eigenvectors().col(n - 1 - i);
      if (s2 <= 0.0) {
        basis.col(i).setZero();
        continue;
      }
      Vector v = x.transpose() * u;
      v -= model.mean * u.sum();
      basis.col(i) = v / std::sqrt(s2);
    }
  }

  double total = 0.0;
  for (double lambda : eigenvalues) total += lambda;
  if (!(total > 1e-300))
    throw Error(ErrorCode::Degenerate, "degenerate matrix: zero variance");

  const Eigen::Index cap =
      std::min<Eigen::Index>({static_cast<Eigen::Index>(options.max_components), n - 1, d});
  const Eigen::Index k = choose_rank(eigenvalues, total, options, cap);

  model.total_variance = total;
  model.components = basis.leftCols(k).transpose();
  if (use_gram) {
    // Re-orthonormalize: the Gram route loses a little orthogonality when
    // eigenvalues are close.
    Eigen::HouseholderQR<Matrix> qr(model.components.transpose());
    Matrix q = qr.householderQ() * Matrix::Identity(d, k);
    for (Eigen::Index i = 0; i < k; ++i)
      if (q.col(i).dot(model.components.row(i).transpose()) < 0.0) q.col(i) *= -1.0;
    model.components = q.transpose();
  }
  apply_sign_convention(model.components);
  for (Eigen::Index i = 0; i < k; ++i) {
    model.explained_variance.push_back(eigenvalues[static_cast<std::size_t>(i)]);
    model.explained_variance_ratio.push_back(eigenvalues[static_cast<std::size_t>(i)] / total);
  }
  return model;
}

}  // namespace

PcaModel fit_pca(const FeatureMatrix& matrix, const PcaOptions& options) {
  return fit_impl(matrix.rows, options);
}

PcaModel fit_pca(const TfidfMatrix& matrix, const PcaOptions& options) {
  return fit_impl(matrix.rows, options);
}

FeatureMatrix apply_pca(const PcaModel& model, const FeatureMatrix& matrix) {
  if (matrix.dims() != model.mean.size())
    throw Error(ErrorCode::InvalidArgument,
                "dimension mismatch: matrix has " + std::to_string(matrix.dims()) +
                    " columns, model expects " + std::to_string(model.mean.size()));
  FeatureMatrix out;
  out.record_ids = matrix.record_ids;
  out.vectorizer = matrix.vectorizer;
  out.preprocessed = matrix.preprocessed;
  out.zero_rows = matrix.zero_rows;
  out.rows = (matrix.rows.rowwise() - model.mean.transpose()) * model.components.transpose();
  return out;
}

FeatureMatrix apply_pca(const PcaModel& model, const TfidfMatrix& matrix, VectorizerTag tag) {
  if (matrix.rows.cols() != model.mean.size())
    throw Error(ErrorCode::InvalidArgument,
                "dimension mismatch: matrix has " + std::to_string(matrix.rows.cols()) +
                    " columns, model expects " + std::to_string(model.mean.size()));
  FeatureMatrix out;
  out.record_ids = matrix.record_ids;
  out.vectorizer = tag;
  out.preprocessed = matrix.preprocessed;
  out.zero_rows = matrix.zero_rows;
  const Matrix projected = matrix.rows * model.components.transpose();
  const Eigen::RowVectorXd offset = model.mean.transpose() * model.components.transpose();
  out.rows = projected.rowwise() - offset;
  return out;
}

Matrix reconstruct(const PcaModel& model, const Matrix& projected) {
  return (projected * model.components).rowwise() + model.mean.transpose();
}

}  // namespace loggrouper
