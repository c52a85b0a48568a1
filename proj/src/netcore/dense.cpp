#include <fkws/errors.hpp>
#include <fkws/netcore.hpp>

#include <algorithm>
#include <cmath>

namespace fkws {

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.rank() != 1 || weight.rank() != 2 || bias.rank() != 1 ||
      weight.dim(1) != input.dim(0) || weight.dim(0) != bias.dim(0)) {
    throw ShapeError("linear shape mismatch: input " + shape_string(input.shape()) + " weight " +
                     shape_string(weight.shape()) + " bias " + shape_string(bias.shape()));
  }
  Tensor out({weight.dim(0)});
  out.vector().noalias() = weight.matrix(weight.dim(0), weight.dim(1)) * input.vector();
  out.vector() += bias.vector();
  return out;
}

Tensor linear_backward(const Tensor& input, const Tensor& weight, const Tensor& grad_output,
                       Tensor& grad_weight, Tensor& grad_bias) {
  const std::size_t d_out = weight.dim(0), d_in = weight.dim(1);
  if (grad_output.size() != d_out || input.size() != d_in || grad_weight.shape() != weight.shape())
    throw ShapeError("linear backward shape mismatch");
  grad_weight.matrix(d_out, d_in).noalias() += grad_output.vector() * input.vector().transpose();
  grad_bias.vector() += grad_output.vector();
  Tensor grad_input({d_in});
  grad_input.vector().noalias() = weight.matrix(d_out, d_in).transpose() * grad_output.vector();
  return grad_input;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (double& x : out.data()) x = x > 0.0 ? x : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_output) {
  if (input.size() != grad_output.size()) throw ShapeError("relu backward size mismatch");
  Tensor grad(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) grad[i] = input[i] > 0.0 ? grad_output[i] : 0.0;
  return grad;
}

SoftmaxCE softmax_ce(const Tensor& logits, std::size_t label) {
  if (logits.rank() != 1 || logits.size() == 0) throw ShapeError("softmax_ce expects a 1-D logit vector");
  if (label >= logits.size())
    throw IndexError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  const auto v = logits.data();
  const double peak = *std::max_element(v.begin(), v.end());
  SoftmaxCE r{0.0, Tensor(logits.shape())};
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    r.probabilities[i] = std::exp(v[i] - peak);
    sum += r.probabilities[i];
  }
  for (double& p : r.probabilities.data()) p /= sum;
  // log-sum-exp form stays finite when p[label] underflows
  r.loss = std::log(sum) - (v[label] - peak);
  return r;
}

Tensor softmax_ce_backward(const Tensor& probabilities, std::size_t label) {
  if (label >= probabilities.size()) throw IndexError("label out of range");
  Tensor g = probabilities;
  g[label] -= 1.0;
  return g;
}

Tensor mean_pool_time(const Tensor& inputs) {
  if (inputs.rank() != 2 || inputs.dim(0) == 0) throw ShapeError("mean_pool_time expects [T,H] with T >= 1");
  const std::size_t t = inputs.dim(0), h = inputs.dim(1);
  Tensor out({h});
  out.vector() = inputs.matrix(t, h).colwise().sum().transpose() / static_cast<double>(t);
  return out;
}

Tensor mean_pool_time_backward(std::size_t steps, const Tensor& grad_output) {
  if (steps == 0) throw ShapeError("mean_pool_time backward with T = 0");
  const std::size_t h = grad_output.size();
  Tensor g({steps, h});
  auto m = g.matrix(steps, h);
  m.rowwise() = grad_output.vector().transpose() / static_cast<double>(steps);
  return g;
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1) throw ShapeError("concat expects 1-D operands");
  TensorBuffer out(a.storage());
  out.insert(out.end(), b.storage().begin(), b.storage().end());
  const std::size_t n = out.size();
  return Tensor({n}, std::move(out));
}

std::pair<Tensor, Tensor> concat_backward(std::size_t first_width, const Tensor& grad_output) {
  if (grad_output.rank() != 1 || first_width > grad_output.size())
    throw ShapeError("concat backward split out of range");
  const auto g = grad_output.storage();
  std::vector<double> a(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(first_width));
  std::vector<double> b(g.begin() + static_cast<std::ptrdiff_t>(first_width), g.end());
  const std::size_t na = a.size(), nb = b.size();
  return {Tensor({na}, std::move(a)), Tensor({nb}, std::move(b))};
}

}  // namespace fkws
