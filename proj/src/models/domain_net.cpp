#include <fkws/errors.hpp>
#include <fkws/models.hpp>

#include <cmath>
#include <random>

namespace fkws {

std::vector<Parameter*> DomainNet::parameters() {
  std::vector<Parameter*> ps;
  for (std::size_t l = 0; l < 2; ++l) {
    ps.push_back(&lstm_w_input[l]);
    ps.push_back(&lstm_w_recurrent[l]);
    ps.push_back(&lstm_bias[l]);
  }
  ps.push_back(&out_w);
  ps.push_back(&out_b);
  return ps;
}

std::vector<const Parameter*> DomainNet::parameters() const {
  std::vector<const Parameter*> out;
  for (Parameter* p : const_cast<DomainNet*>(this)->parameters()) out.push_back(p);
  return out;
}

std::size_t DomainNet::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

void DomainNet::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

DomainNet build_domain_net(std::uint64_t seed, const DomainNetConfig& config) {
  DomainNet net;
  net.config = config;
  std::mt19937_64 rng(seed);
  auto init = [&rng](Parameter& p, std::size_t fan_in) {
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : p.value.data()) v = dist(rng);
  };
  const std::size_t h = config.hidden;
  for (std::size_t l = 0; l < 2; ++l) {
    const std::size_t d_in = l == 0 ? config.input_dim : h;
    const std::string prefix = "lstm" + std::to_string(l + 1);
    net.lstm_w_input[l] = Parameter(prefix + ".w_input", {4 * h, d_in});
    net.lstm_w_recurrent[l] = Parameter(prefix + ".w_recurrent", {4 * h, h});
    net.lstm_bias[l] = Parameter(prefix + ".bias", {4 * h});
    init(net.lstm_w_input[l], d_in);
    init(net.lstm_w_recurrent[l], h);
  }
  net.out_w = Parameter("out.weight", {config.classes, h});
  net.out_b = Parameter("out.bias", {config.classes});
  init(net.out_w, h);
  return net;
}

DomainTrace forward_domain(const DomainNet& net, const FeatureMatrix& features) {
  const auto steps = static_cast<std::size_t>(features.rows());
  const auto width = static_cast<std::size_t>(features.cols());
  if (steps == 0) throw ShapeError("domain net needs at least one frame");
  if (width != net.config.input_dim)
    throw ShapeError("domain net expects " + std::to_string(net.config.input_dim) + "-dim frames");

  DomainTrace tr;
  tr.inputs = Tensor({steps, width});
  tr.inputs.matrix(steps, width) = features;
  const Tensor zero({net.config.hidden});
  const Tensor* x = &tr.inputs;
  for (std::size_t l = 0; l < 2; ++l) {
    tr.layers[l] = lstm_layer(*x, {net.lstm_w_input[l].value, net.lstm_w_recurrent[l].value, net.lstm_bias[l].value},
                              zero, zero);
    x = &tr.layers[l].outputs;
  }
  tr.pooled = mean_pool_time(tr.layers[1].outputs);
  tr.logits = linear(tr.pooled, net.out_w.value, net.out_b.value);
  return tr;
}

void backward_domain(DomainNet& net, const DomainTrace& tr, const Tensor& grad_logits) {
  const Tensor g_pooled = linear_backward(tr.pooled, net.out_w.value, grad_logits, net.out_w.grad, net.out_b.grad);
  Tensor g = mean_pool_time_backward(tr.layers[1].outputs.dim(0), g_pooled);
  for (std::size_t l = 2; l-- > 0;) {
    const Tensor& in = l == 0 ? tr.inputs : tr.layers[0].outputs;
    LstmInputGrads gi = lstm_layer_backward(
        in, {net.lstm_w_input[l].value, net.lstm_w_recurrent[l].value, net.lstm_bias[l].value}, tr.layers[l], g,
        {net.lstm_w_input[l].grad, net.lstm_w_recurrent[l].grad, net.lstm_bias[l].grad});
    g = std::move(gi.inputs);
  }
}

DomainEmbedding extract_domain_embedding(const DomainNet& net, const FeatureMatrix& features) {
  if (!net.frozen) throw UsageError("domain embeddings must come from a pre-trained, frozen domain classifier");
  return {forward_domain(net, features).pooled};
}

}  // namespace fkws
