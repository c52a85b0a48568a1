#pragma once

// Differentiable kernels for the fixed keyword/domain topologies. Each
// forward op has a matching *_backward that returns the input gradient and
// accumulates (+=) parameter gradients, so a batch is summed in call order.

#include <fkws/types.hpp>

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fkws {

using Shape = std::vector<std::size_t>;
/// Fixed alignment keeps vectorized reductions in the same order across
/// allocations, so repeated runs are bitwise identical.
using TensorBuffer = std::vector<double, Eigen::aligned_allocator<double>>;

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, const std::vector<double>& data);
  Tensor(Shape shape, TensorBuffer&& data);
  Tensor(Shape shape, std::initializer_list<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  TensorBuffer& storage() noexcept { return data_; }
  const TensorBuffer& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  void fill(double v);
  bool all_finite() const;

  /// Row-major view as a rows x cols matrix; rows*cols must equal size().
  Eigen::Map<RowMatrix> matrix(std::size_t rows, std::size_t cols);
  Eigen::Map<const RowMatrix> matrix(std::size_t rows, std::size_t cols) const;
  Eigen::Map<Eigen::VectorXd> vector();
  Eigen::Map<const Eigen::VectorXd> vector() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  TensorBuffer data_;
};

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Trainable tensor with its gradient and optimizer velocity.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor velocity;

  Parameter() = default;
  Parameter(std::string name, Shape shape);
  void zero_grad() { grad.fill(0.0); }
};

// ---- conv2d: valid 3x3 cross-correlation, stride 1 --------------------------

/// input [C_in,H,W], kernels [C_out,C_in,3,3], bias [C_out] -> [C_out,H-2,W-2]
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias);

/// Accumulates into grad_kernels / grad_bias. The input gradient is skipped
/// (empty tensor returned) when need_input_grad is false.
Tensor conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_output,
                       Tensor& grad_kernels, Tensor& grad_bias, bool need_input_grad = true);

// ---- maxpool2: 2x2 windows, stride 2, floor division ------------------------

struct PoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

PoolResult maxpool2(const Tensor& input);
Tensor maxpool2_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                         const Tensor& grad_output);

// ---- linear ------------------------------------------------------------------

/// input [D_in], weight [D_out,D_in], bias [D_out] -> [D_out]
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias);
Tensor linear_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_output,
                       Tensor& grad_weight, Tensor& grad_bias);

// ---- relu --------------------------------------------------------------------

Tensor relu(const Tensor& input);
/// Subgradient 0 at x == 0.
Tensor relu_backward(const Tensor& input, const Tensor& grad_output);

// ---- softmax cross-entropy ---------------------------------------------------

struct SoftmaxCE {
  double loss = 0.0;
  Tensor probabilities;
};

SoftmaxCE softmax_ce(const Tensor& logits, std::size_t label);
/// p - onehot(label)
Tensor softmax_ce_backward(const Tensor& probabilities, std::size_t label);

// ---- LSTM --------------------------------------------------------------------

/// Gate rows are stacked [input; forget; candidate; output], each H wide.
struct LstmWeights {
  const Tensor& w_input;      // [4H, D_in]
  const Tensor& w_recurrent;  // [4H, H]
  const Tensor& bias;         // [4H]
};

struct LstmGrads {
  Tensor& w_input;
  Tensor& w_recurrent;
  Tensor& bias;
};

struct LstmTrace {
  Tensor outputs;  // [T, H]
  Tensor cells;    // [T, H]
  Tensor gates;    // [T, 4H] post-activation
  Tensor h0;
  Tensor c0;
};

LstmTrace lstm_layer(const Tensor& inputs, LstmWeights weights, const Tensor& h0,
                     const Tensor& c0);

struct LstmInputGrads {
  Tensor inputs;  // [T, D_in]
  Tensor h0;
  Tensor c0;
};

/// Full backpropagation through time for dL/d(outputs) = grad_outputs [T,H].
LstmInputGrads lstm_layer_backward(const Tensor& inputs, LstmWeights weights,
                                   const LstmTrace& trace, const Tensor& grad_outputs,
                                   LstmGrads grads);

// ---- temporal mean pooling ---------------------------------------------------

Tensor mean_pool_time(const Tensor& inputs);  // [T,H] -> [H]
Tensor mean_pool_time_backward(std::size_t steps, const Tensor& grad_output);

// ---- concat ------------------------------------------------------------------

Tensor concat(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> concat_backward(std::size_t first_width, const Tensor& grad_output);

}  // namespace fkws
