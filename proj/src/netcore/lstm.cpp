#include <fkws/errors.hpp>
#include <fkws/netcore.hpp>

#include <cmath>

namespace fkws {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct LstmDims {
  std::size_t steps, d_in, hidden;
};

LstmDims check_lstm(const Tensor& inputs, const LstmWeights& w, const Tensor& h0, const Tensor& c0) {
  if (inputs.rank() != 2 || inputs.dim(0) == 0) throw ShapeError("lstm inputs must be [T,D] with T >= 1");
  const std::size_t d_in = inputs.dim(1);
  if (w.w_input.rank() != 2 || w.w_input.dim(0) % 4 != 0) throw ShapeError("lstm w_input must be [4H,D]");
  const std::size_t hidden = w.w_input.dim(0) / 4;
  if (w.w_input.dim(1) != d_in) throw ShapeError("lstm input width mismatch");
  if (w.w_recurrent.shape() != Shape{4 * hidden, hidden}) throw ShapeError("lstm w_recurrent must be [4H,H]");
  if (w.bias.shape() != Shape{4 * hidden}) throw ShapeError("lstm bias must be [4H]");
  if (h0.size() != hidden || c0.size() != hidden) throw ShapeError("lstm initial state width mismatch");
  return {inputs.dim(0), d_in, hidden};
}

}  // namespace

LstmTrace lstm_layer(const Tensor& inputs, LstmWeights w, const Tensor& h0, const Tensor& c0) {
  const auto [steps, d_in, hid] = check_lstm(inputs, w, h0, c0);
  const auto H = static_cast<Eigen::Index>(hid);

  LstmTrace tr{Tensor({steps, hid}), Tensor({steps, hid}), Tensor({steps, 4 * hid}), h0, c0};
  auto gates = tr.gates.matrix(steps, 4 * hid);
  gates.noalias() = inputs.matrix(steps, d_in) * w.w_input.matrix(4 * hid, d_in).transpose();
  gates.rowwise() += w.bias.vector().transpose();

  const auto w_rec = w.w_recurrent.matrix(4 * hid, hid);
  auto hs = tr.outputs.matrix(steps, hid);
  auto cs = tr.cells.matrix(steps, hid);
  Eigen::VectorXd h_prev = h0.vector(), c_prev = c0.vector();
  for (std::size_t t = 0; t < steps; ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    Eigen::VectorXd z = gates.row(row).transpose() + w_rec * h_prev;
    for (Eigen::Index j = 0; j < H; ++j) {
      z(j) = sigmoid(z(j));                  // input
      z(H + j) = sigmoid(z(H + j));          // forget
      z(2 * H + j) = std::tanh(z(2 * H + j));  // candidate
      z(3 * H + j) = sigmoid(z(3 * H + j));  // output
    }
    gates.row(row) = z.transpose();
    for (Eigen::Index j = 0; j < H; ++j) {
      const double c = z(H + j) * c_prev(j) + z(j) * z(2 * H + j);
      cs(row, j) = c;
      hs(row, j) = z(3 * H + j) * std::tanh(c);
    }
    h_prev = hs.row(row).transpose();
    c_prev = cs.row(row).transpose();
  }
  return tr;
}

LstmInputGrads lstm_layer_backward(const Tensor& inputs, LstmWeights w, const LstmTrace& tr,
                                   const Tensor& grad_outputs, LstmGrads g) {
  const auto [steps, d_in, hid] = check_lstm(inputs, w, tr.h0, tr.c0);
  if (grad_outputs.shape() != Shape{steps, hid}) throw ShapeError("lstm grad_outputs must be [T,H]");
  const auto H = static_cast<Eigen::Index>(hid);

  const auto gates = tr.gates.matrix(steps, 4 * hid);
  const auto hs = tr.outputs.matrix(steps, hid);
  const auto cs = tr.cells.matrix(steps, hid);
  const auto gout = grad_outputs.matrix(steps, hid);
  const auto w_rec = w.w_recurrent.matrix(4 * hid, hid);

  RowMatrix dz(static_cast<Eigen::Index>(steps), 4 * H);
  RowMatrix h_prev_all(static_cast<Eigen::Index>(steps), H);
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H), dc_next = Eigen::VectorXd::Zero(H);

  for (std::size_t step = steps; step-- > 0;) {
    const auto t = static_cast<Eigen::Index>(step);
    const Eigen::VectorXd c_prev = t > 0 ? Eigen::VectorXd(cs.row(t - 1).transpose()) : tr.c0.vector();
    h_prev_all.row(t) = t > 0 ? Eigen::RowVectorXd(hs.row(t - 1)) : tr.h0.vector().transpose();
    for (Eigen::Index j = 0; j < H; ++j) {
      const double i = gates(t, j), f = gates(t, H + j), gc = gates(t, 2 * H + j), o = gates(t, 3 * H + j);
      const double tc = std::tanh(cs(t, j));
      const double dh = gout(t, j) + dh_next(j);
      const double dc = dh * o * (1.0 - tc * tc) + dc_next(j);
      dz(t, j) = dc * gc * i * (1.0 - i);
      dz(t, H + j) = dc * c_prev(j) * f * (1.0 - f);
      dz(t, 2 * H + j) = dc * i * (1.0 - gc * gc);
      dz(t, 3 * H + j) = dh * tc * o * (1.0 - o);
      dc_next(j) = dc * f;
    }
    dh_next.noalias() = w_rec.transpose() * dz.row(t).transpose();
  }

  g.w_input.matrix(4 * hid, d_in).noalias() += dz.transpose() * inputs.matrix(steps, d_in);
  g.w_recurrent.matrix(4 * hid, hid).noalias() += dz.transpose() * h_prev_all;
  g.bias.vector() += dz.colwise().sum().transpose();

  LstmInputGrads out{Tensor({steps, d_in}), Tensor({hid}), Tensor({hid})};
  out.inputs.matrix(steps, d_in).noalias() = dz * w.w_input.matrix(4 * hid, d_in);
  out.h0.vector() = dh_next;
  out.c0.vector() = dc_next;
  return out;
}

}  // namespace fkws
