#include <fkws/errors.hpp>
#include <fkws/netcore.hpp>

#include <limits>

namespace fkws {
namespace {

constexpr std::size_t kK = 3;

struct ConvDims {
  std::size_t c_in, h, w, c_out, ho, wo;
};

ConvDims check_conv(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  if (input.rank() != 3) throw ShapeError("conv2d input must be [C,H,W], got " + shape_string(input.shape()));
  if (kernels.rank() != 4 || kernels.dim(2) != kK || kernels.dim(3) != kK)
    throw ShapeError("conv2d kernels must be [C_out,C_in,3,3], got " + shape_string(kernels.shape()));
  if (kernels.dim(1) != input.dim(0))
    throw ShapeError("conv2d channel mismatch: input " + shape_string(input.shape()) +
                     " kernels " + shape_string(kernels.shape()));
  if (bias.rank() != 1 || bias.dim(0) != kernels.dim(0))
    throw ShapeError("conv2d bias must be [C_out]");
  if (input.dim(1) < kK || input.dim(2) < kK) throw ShapeError("conv2d input smaller than 3x3");
  return {input.dim(0), input.dim(1), input.dim(2), kernels.dim(0), input.dim(1) - 2, input.dim(2) - 2};
}

// cols[(c*9 + ky*3 + kx), (y*wo + x)] = input[c, y+ky, x+kx]
RowMatrix im2col(const Tensor& input, const ConvDims& d) {
  RowMatrix cols(static_cast<Eigen::Index>(d.c_in * 9), static_cast<Eigen::Index>(d.ho * d.wo));
  const double* src = input.data().data();
  for (std::size_t c = 0; c < d.c_in; ++c) {
    for (std::size_t ky = 0; ky < kK; ++ky) {
      for (std::size_t kx = 0; kx < kK; ++kx) {
        double* row = cols.row(static_cast<Eigen::Index>(c * 9 + ky * 3 + kx)).data();
        for (std::size_t y = 0; y < d.ho; ++y) {
          const double* in_row = src + (c * d.h + y + ky) * d.w + kx;
          for (std::size_t x = 0; x < d.wo; ++x) row[y * d.wo + x] = in_row[x];
        }
      }
    }
  }
  return cols;
}

void col2im(const RowMatrix& cols, const ConvDims& d, Tensor& grad_input) {
  double* dst = grad_input.data().data();
  for (std::size_t c = 0; c < d.c_in; ++c) {
    for (std::size_t ky = 0; ky < kK; ++ky) {
      for (std::size_t kx = 0; kx < kK; ++kx) {
        const double* row = cols.row(static_cast<Eigen::Index>(c * 9 + ky * 3 + kx)).data();
        for (std::size_t y = 0; y < d.ho; ++y) {
          double* out_row = dst + (c * d.h + y + ky) * d.w + kx;
          for (std::size_t x = 0; x < d.wo; ++x) out_row[x] += row[y * d.wo + x];
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  const ConvDims d = check_conv(input, kernels, bias);
  const RowMatrix cols = im2col(input, d);
  Tensor out({d.c_out, d.ho, d.wo});
  auto o = out.matrix(d.c_out, d.ho * d.wo);
  o.noalias() = kernels.matrix(d.c_out, d.c_in * 9) * cols;
  o.colwise() += bias.vector();
  return out;
}

Tensor conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_output,
                       Tensor& grad_kernels, Tensor& grad_bias, bool need_input_grad) {
  const ConvDims d = check_conv(input, kernels, grad_bias);
  if (grad_output.shape() != Shape{d.c_out, d.ho, d.wo})
    throw ShapeError("conv2d grad_output shape " + shape_string(grad_output.shape()));
  if (grad_kernels.shape() != kernels.shape()) throw ShapeError("conv2d grad_kernels shape");

  const RowMatrix cols = im2col(input, d);
  const auto g = grad_output.matrix(d.c_out, d.ho * d.wo);
  grad_kernels.matrix(d.c_out, d.c_in * 9).noalias() += g * cols.transpose();
  grad_bias.vector() += g.rowwise().sum();

  if (!need_input_grad) return {};
  const RowMatrix grad_cols = kernels.matrix(d.c_out, d.c_in * 9).transpose() * g;
  Tensor grad_input(input.shape());
  col2im(grad_cols, d, grad_input);
  return grad_input;
}

PoolResult maxpool2(const Tensor& input) {
  if (input.rank() != 3) throw ShapeError("maxpool2 input must be [C,H,W]");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h < 2 || w < 2) throw ShapeError("maxpool2 needs H,W >= 2, got " + shape_string(input.shape()));
  const std::size_t ho = h / 2, wo = w / 2;
  PoolResult r{Tensor({c, ho, wo}), std::vector<std::size_t>(c * ho * wo)};
  const auto src = input.data();
  std::size_t o = 0;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < ho; ++y) {
      for (std::size_t x = 0; x < wo; ++x, ++o) {
        // row-major scan, strict > keeps the first maximum on ties
        std::size_t best = (ch * h + 2 * y) * w + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (ch * h + 2 * y + dy) * w + 2 * x + dx;
            if (src[idx] > src[best]) best = idx;
          }
        }
        r.output[o] = src[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

Tensor maxpool2_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                         const Tensor& grad_output) {
  if (grad_output.size() != argmax.size()) throw ShapeError("maxpool2 backward size mismatch");
  Tensor grad(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) grad[argmax[i]] += grad_output[i];
  return grad;
}

}  // namespace fkws
