#include <fkws/errors.hpp>
#include <fkws/netcore.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace fkws {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, const std::vector<double>& data)
    : Tensor(std::move(shape), TensorBuffer(data.begin(), data.end())) {}

Tensor::Tensor(Shape shape, std::initializer_list<double> data)
    : Tensor(std::move(shape), TensorBuffer(data.begin(), data.end())) {}

Tensor::Tensor(Shape shape, TensorBuffer&& data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Eigen::Map<RowMatrix> Tensor::matrix(std::size_t rows, std::size_t cols) {
  if (rows * cols != data_.size()) throw ShapeError("matrix view size mismatch");
  return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Eigen::Map<const RowMatrix> Tensor::matrix(std::size_t rows, std::size_t cols) const {
  if (rows * cols != data_.size()) throw ShapeError("matrix view size mismatch");
  return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}

Eigen::Map<Eigen::VectorXd> Tensor::vector() {
  return {data_.data(), static_cast<Eigen::Index>(data_.size())};
}

Eigen::Map<const Eigen::VectorXd> Tensor::vector() const {
  return {data_.data(), static_cast<Eigen::Index>(data_.size())};
}

Parameter::Parameter(std::string n, Shape shape)
    : name(std::move(n)), value(shape), grad(shape), velocity(std::move(shape)) {}

}  // namespace fkws
