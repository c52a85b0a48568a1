#include <fkws/errors.hpp>
#include <fkws/losses.hpp>

namespace fkws {

RowMatrix covariance(const RowMatrix& d) {
  const Eigen::Index n = d.rows();
  if (n < 2) throw DegenerateBatchError("covariance needs at least 2 rows, got " + std::to_string(n));
  const Eigen::RowVectorXd s = d.colwise().sum();
  RowMatrix c = d.transpose() * d;
  c.noalias() -= (s.transpose() * s) / static_cast<double>(n);
  c /= static_cast<double>(n - 1);
  return c;
}

RowMatrix covariance_backward(const RowMatrix& d, const RowMatrix& grad_cov) {
  const Eigen::Index n = d.rows();
  if (n < 2) throw DegenerateBatchError("covariance needs at least 2 rows");
  if (grad_cov.rows() != d.cols() || grad_cov.cols() != d.cols()) throw ShapeError("covariance gradient shape");
  const RowMatrix g_sym = grad_cov + grad_cov.transpose();
  const Eigen::RowVectorXd s = d.colwise().sum();
  RowMatrix grad = d * g_sym;
  grad.rowwise() -= (s * g_sym) / static_cast<double>(n);
  grad /= static_cast<double>(n - 1);
  return grad;
}

namespace {

void check_pair(const RowMatrix& source, const RowMatrix& target) {
  if (source.cols() != target.cols())
    throw ShapeError("CORAL feature widths differ: " + std::to_string(source.cols()) + " vs " +
                     std::to_string(target.cols()));
  if (source.rows() < 2 || target.rows() < 2) throw DegenerateBatchError("CORAL needs at least 2 rows per side");
}

}  // namespace

double coral_loss(const RowMatrix& source, const RowMatrix& target) {
  check_pair(source, target);
  const auto d = static_cast<double>(source.cols());
  return (covariance(source) - covariance(target)).squaredNorm() / (4.0 * d * d);
}

CoralResult coral_loss_with_grad(const RowMatrix& source, const RowMatrix& target) {
  check_pair(source, target);
  const auto d = static_cast<double>(source.cols());
  const RowMatrix diff = covariance(source) - covariance(target);
  const RowMatrix g = diff / (2.0 * d * d);
  return {diff.squaredNorm() / (4.0 * d * d), covariance_backward(source, g), covariance_backward(target, -g)};
}

}  // namespace fkws
