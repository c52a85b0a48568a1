#include <fkws/errors.hpp>
#include <fkws/models.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace fkws {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Baseline: return "baseline";
    case Variant::Emb1: return "emb1";
    case Variant::Emb2: return "emb2";
    case Variant::Mtl: return "mtl";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  if (text == "baseline") return Variant::Baseline;
  if (text == "emb1") return Variant::Emb1;
  if (text == "emb2") return Variant::Emb2;
  if (text == "mtl") return Variant::Mtl;
  throw ConfigError("unknown variant '" + std::string(text) + "'");
}

std::size_t conv_stack_side(std::size_t input_size) {
  std::size_t side = input_size;
  for (int stage = 0; stage < 3; ++stage) {
    if (side < 4) throw ShapeError("input too small for three conv/pool stages");
    side = (side - 2) / 2;
  }
  return side;
}

std::size_t KeywordNet::flatten_width() const {
  const std::size_t side = conv_stack_side(config.input_size);
  return side * side * config.channels[2];
}

std::size_t KeywordNet::fc1_input_width() const {
  return flatten_width() + (variant == Variant::Emb2 ? config.embedding_dim : 0);
}

std::size_t KeywordNet::out_input_width() const {
  return config.fc1_width + (variant == Variant::Emb1 ? config.embedding_dim : 0);
}

std::vector<Parameter*> KeywordNet::parameters() {
  std::vector<Parameter*> ps;
  for (std::size_t s = 0; s < 3; ++s) {
    ps.push_back(&conv_w[s]);
    ps.push_back(&conv_b[s]);
  }
  for (Parameter* p : {&fc1_w, &fc1_b, &out_w, &out_b}) ps.push_back(p);
  if (variant == Variant::Mtl) {
    ps.push_back(&domain_w);
    ps.push_back(&domain_b);
  }
  return ps;
}

std::vector<const Parameter*> KeywordNet::parameters() const {
  std::vector<const Parameter*> out;
  for (Parameter* p : const_cast<KeywordNet*>(this)->parameters()) out.push_back(p);
  return out;
}

std::size_t KeywordNet::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

void KeywordNet::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

namespace {

void init_uniform(Parameter& p, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : p.value.data()) v = dist(rng);
}

Tensor window_tensor(const RowMatrix& window, std::size_t size) {
  if (static_cast<std::size_t>(window.rows()) != size || static_cast<std::size_t>(window.cols()) != size)
    throw ShapeError("keyword window must be " + std::to_string(size) + "x" + std::to_string(size) + ", got " +
                     std::to_string(window.rows()) + "x" + std::to_string(window.cols()));
  Tensor t({1, size, size});
  t.matrix(size, size) = window;
  return t;
}

}  // namespace

KeywordNet build_keyword_net(Variant variant, std::size_t words, std::uint64_t seed,
                             const KeywordNetConfig& config) {
  if (words == 0) throw ConfigError("keyword net needs at least one word");
  KeywordNet net;
  net.variant = variant;
  net.words = words;
  net.config = config;

  std::mt19937_64 rng(seed);
  std::size_t c_in = 1;
  for (std::size_t s = 0; s < 3; ++s) {
    const std::size_t c_out = config.channels[s];
    net.conv_w[s] = Parameter("conv" + std::to_string(s + 1) + ".weight", {c_out, c_in, 3, 3});
    net.conv_b[s] = Parameter("conv" + std::to_string(s + 1) + ".bias", {c_out});
    init_uniform(net.conv_w[s], c_in * 9, rng);
    c_in = c_out;
  }
  net.fc1_w = Parameter("fc1.weight", {config.fc1_width, net.fc1_input_width()});
  net.fc1_b = Parameter("fc1.bias", {config.fc1_width});
  init_uniform(net.fc1_w, net.fc1_input_width(), rng);
  net.out_w = Parameter("out.weight", {words + 1, net.out_input_width()});
  net.out_b = Parameter("out.bias", {words + 1});
  init_uniform(net.out_w, net.out_input_width(), rng);
  if (variant == Variant::Mtl) {
    net.domain_w = Parameter("domain.weight", {kNumDomains, config.fc1_width});
    net.domain_b = Parameter("domain.bias", {kNumDomains});
    init_uniform(net.domain_w, config.fc1_width, rng);
  }
  return net;
}

KeywordTrace forward_keyword_trace(const KeywordNet& net, const RowMatrix& window, const DomainEmbedding* embedding) {
  if (uses_embedding(net.variant) != (embedding != nullptr))
    throw ConfigError(std::string("variant ") + std::string(to_string(net.variant)) +
                      (embedding ? " does not take" : " requires") + " a domain embedding");
  if (embedding && embedding->values.size() != net.config.embedding_dim)
    throw ShapeError("domain embedding width " + std::to_string(embedding->values.size()) + ", expected " +
                     std::to_string(net.config.embedding_dim));

  KeywordTrace tr;
  Tensor x = window_tensor(window, net.config.input_size);
  for (std::size_t s = 0; s < 3; ++s) {
    tr.stage_input[s] = std::move(x);
    tr.conv_out[s] = conv2d(tr.stage_input[s], net.conv_w[s].value, net.conv_b[s].value);
    Tensor act = relu(tr.conv_out[s]);
    tr.pool_in_shape[s] = act.shape();
    PoolResult pooled = maxpool2(act);
    tr.pool_argmax[s] = std::move(pooled.argmax);
    x = std::move(pooled.output);
  }
  const std::size_t flat_width = x.size();
  Tensor flat({flat_width}, std::move(x.storage()));
  tr.fc1_in = net.variant == Variant::Emb2 ? concat(flat, embedding->values) : std::move(flat);
  tr.fc1_pre = linear(tr.fc1_in, net.fc1_w.value, net.fc1_b.value);
  tr.record.feature_layer = relu(tr.fc1_pre);
  tr.out_in = net.variant == Variant::Emb1 ? concat(tr.record.feature_layer, embedding->values) : tr.record.feature_layer;
  tr.record.word_logits = linear(tr.out_in, net.out_w.value, net.out_b.value);
  if (net.variant == Variant::Mtl)
    tr.record.domain_logits = linear(tr.record.feature_layer, net.domain_w.value, net.domain_b.value);
  return tr;
}

ForwardRecord forward_keyword(const KeywordNet& net, const RowMatrix& window, const DomainEmbedding* embedding) {
  return forward_keyword_trace(net, window, embedding).record;
}

void backward_keyword(KeywordNet& net, const KeywordTrace& tr, const Tensor& grad_word_logits,
                      const Tensor* grad_domain_logits, const Tensor* grad_feature) {
  Tensor g_out_in = linear_backward(tr.out_in, net.out_w.value, grad_word_logits, net.out_w.grad, net.out_b.grad);
  Tensor g_feature = net.variant == Variant::Emb1
                         ? concat_backward(net.config.fc1_width, g_out_in).first
                         : std::move(g_out_in);
  if (grad_domain_logits) {
    if (net.variant != Variant::Mtl) throw ConfigError("domain-logit gradient given to a non-MTL net");
    const Tensor g = linear_backward(tr.record.feature_layer, net.domain_w.value, *grad_domain_logits,
                                     net.domain_w.grad, net.domain_b.grad);
    g_feature.vector() += g.vector();
  }
  if (grad_feature) {
    if (grad_feature->size() != g_feature.size()) throw ShapeError("feature-layer gradient width mismatch");
    g_feature.vector() += grad_feature->vector();
  }

  const Tensor g_fc1_pre = relu_backward(tr.fc1_pre, g_feature);
  Tensor g_fc1_in = linear_backward(tr.fc1_in, net.fc1_w.value, g_fc1_pre, net.fc1_w.grad, net.fc1_b.grad);
  const std::size_t flat_width = net.flatten_width();
  Tensor g_flat = net.variant == Variant::Emb2 ? concat_backward(flat_width, g_fc1_in).first : std::move(g_fc1_in);

  const std::size_t side = conv_stack_side(net.config.input_size);
  Tensor g({net.config.channels[2], side, side}, std::move(g_flat.storage()));
  for (std::size_t s = 3; s-- > 0;) {
    const Tensor g_act = maxpool2_backward(tr.pool_in_shape[s], tr.pool_argmax[s], g);
    const Tensor g_conv = relu_backward(tr.conv_out[s], g_act);
    g = conv2d_backward(tr.stage_input[s], net.conv_w[s].value, g_conv, net.conv_w[s].grad, net.conv_b[s].grad,
                        /*need_input_grad=*/s > 0);
  }
}

namespace {

/// Rows [first, first + count) of a [C,H,W] tensor.
Tensor slice_rows(const Tensor& t, std::size_t first, std::size_t count) {
  const std::size_t c = t.dim(0), h = t.dim(1), w = t.dim(2);
  Tensor out({c, count, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    std::copy_n(t.data().begin() + static_cast<std::ptrdiff_t>((ch * h + first) * w), count * w,
                out.data().begin() + static_cast<std::ptrdiff_t>(ch * count * w));
  return out;
}

/// relu + 2x2 pool of a tall map whose pooling grid starts at row `parity`.
Tensor pool_from(const Tensor& conv_out, std::size_t parity) {
  const std::size_t h = conv_out.dim(1);
  if (h < parity + 2) return {};
  return maxpool2(relu(slice_rows(conv_out, parity, h - parity))).output;
}

}  // namespace

// Each stage runs once per pooling phase over the whole utterance instead of
// once per window: conv is translation-equivariant, and a window starting at
// frame j = 2q + p sees rows q.. of the stage-1 map pooled from phase p, and
// likewise down the stack. Results equal the per-window forward.
RowMatrix frame_posteriors(const KeywordNet& net, const FeatureMatrix& features, const DomainEmbedding* embedding) {
  const auto frames = static_cast<std::size_t>(features.rows());
  const std::size_t win = net.config.input_size;
  if (static_cast<std::size_t>(features.cols()) != win)
    throw ShapeError("features have " + std::to_string(features.cols()) + " bins, net expects " + std::to_string(win));
  if (frames < win) return {};
  if (uses_embedding(net.variant) != (embedding != nullptr))
    throw ConfigError(std::string("variant ") + std::string(to_string(net.variant)) +
                      (embedding ? " does not take" : " requires") + " a domain embedding");
  const std::size_t count = frames - win + 1;

  // stage s map for phase path `code` (bit k = parity chosen at stage k)
  std::array<std::vector<Tensor>, 3> maps;
  Tensor input({1, frames, win});
  input.matrix(frames, win) = features;
  const Tensor conv1 = conv2d(input, net.conv_w[0].value, net.conv_b[0].value);
  for (std::size_t p = 0; p < 2; ++p) maps[0].push_back(pool_from(conv1, p));
  for (std::size_t s = 1; s < 3; ++s) {
    for (std::size_t code = 0; code < maps[s - 1].size(); ++code) {
      const Tensor& prev = maps[s - 1][code];
      const bool usable = !prev.empty() && prev.dim(1) >= 3;
      const Tensor conv = usable ? conv2d(prev, net.conv_w[s].value, net.conv_b[s].value) : Tensor{};
      for (std::size_t p = 0; p < 2; ++p) maps[s].push_back(conv.empty() ? Tensor{} : pool_from(conv, p));
    }
  }

  const std::size_t side = conv_stack_side(win);
  const std::size_t ch = net.config.channels[2];
  RowMatrix post(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(net.words + 1));
  Tensor flat({ch * side * side});
  for (std::size_t j = 0; j < count; ++j) {
    std::size_t offset = j, code = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      code = code * 2 + offset % 2;
      offset /= 2;
    }
    const Tensor& m = maps[2][code];
    const std::size_t h = m.dim(1), w = m.dim(2);
    for (std::size_t c = 0; c < ch; ++c)
      for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < side; ++x) flat[(c * side + y) * side + x] = m[(c * h + offset + y) * w + x];

    const Tensor fc1_in = net.variant == Variant::Emb2 ? concat(flat, embedding->values) : flat;
    const Tensor feature = relu(linear(fc1_in, net.fc1_w.value, net.fc1_b.value));
    const Tensor out_in = net.variant == Variant::Emb1 ? concat(feature, embedding->values) : feature;
    const Tensor logits = linear(out_in, net.out_w.value, net.out_b.value);
    post.row(static_cast<Eigen::Index>(j)) = softmax_ce(logits, 0).probabilities.vector().transpose();
  }
  return post;
}

}  // namespace fkws
