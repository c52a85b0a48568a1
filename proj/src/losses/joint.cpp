#include <fkws/errors.hpp>
#include <fkws/losses.hpp>

#include <cmath>

namespace fkws {

std::string_view to_string(CoralStrategy s) {
  switch (s) {
    case CoralStrategy::S1: return "s1";
    case CoralStrategy::S2: return "s2";
    case CoralStrategy::S3: return "s3";
    case CoralStrategy::S4: return "s4";
    case CoralStrategy::S5: return "s5";
  }
  return "?";
}

CoralStrategy parse_strategy(std::string_view text) {
  for (auto s : {CoralStrategy::S1, CoralStrategy::S2, CoralStrategy::S3, CoralStrategy::S4, CoralStrategy::S5})
    if (text == to_string(s)) return s;
  throw ConfigError("unknown CORAL strategy '" + std::string(text) + "' (expected s1..s5)");
}

std::vector<DomainTag> domains_needed(CoralStrategy s) {
  switch (s) {
    case CoralStrategy::S1: return {DomainTag::D025, DomainTag::D1M};
    case CoralStrategy::S2: return {DomainTag::D025, DomainTag::D3M};
    default: return {DomainTag::D025, DomainTag::D1M, DomainTag::D3M};
  }
}

namespace {

struct Pair {
  // Each side is a list of domains whose rows are stacked in order.
  std::vector<DomainTag> a;
  std::vector<DomainTag> b;
};

std::vector<Pair> pairs_of(CoralStrategy s) {
  using D = DomainTag;
  switch (s) {
    case CoralStrategy::S1: return {{{D::D025}, {D::D1M}}};
    case CoralStrategy::S2: return {{{D::D025}, {D::D3M}}};
    case CoralStrategy::S3: return {{{D::D025}, {D::D1M, D::D3M}}};
    case CoralStrategy::S4: return {{{D::D025}, {D::D1M}}, {{D::D025}, {D::D3M}}};
    case CoralStrategy::S5: return {{{D::D025}, {D::D1M}}, {{D::D025}, {D::D3M}}, {{D::D1M}, {D::D3M}}};
  }
  return {};
}

RowMatrix stack(const CoralBatch& batch, const std::vector<DomainTag>& side) {
  Eigen::Index rows = 0;
  for (DomainTag d : side) rows += batch[d].rows();
  RowMatrix out(rows, batch[side.front()].cols());
  Eigen::Index at = 0;
  for (DomainTag d : side) {
    out.middleRows(at, batch[d].rows()) = batch[d];
    at += batch[d].rows();
  }
  return out;
}

void scatter(std::array<RowMatrix, kNumDomains>& grads, const std::vector<DomainTag>& side, const RowMatrix& g,
             double weight) {
  Eigen::Index at = 0;
  for (DomainTag d : side) {
    RowMatrix& dst = grads[index_of(d)];
    dst += weight * g.middleRows(at, dst.rows());
    at += dst.rows();
  }
}

}  // namespace

JointCoralResult joint_coral_loss(CoralStrategy strategy, const CoralBatch& batch, double ce, double lambda) {
  for (DomainTag d : domains_needed(strategy))
    if (batch[d].rows() < 2)
      throw DegenerateBatchError("CORAL strategy " + std::string(to_string(strategy)) + " needs >= 2 rows of domain " +
                                 std::string(to_string(d)) + ", batch has " + std::to_string(batch[d].rows()));

  JointCoralResult r;
  for (std::size_t i = 0; i < kNumDomains; ++i)
    r.grads[i] = RowMatrix::Zero(batch.features[i].rows(), batch.features[i].cols());

  const auto pairs = pairs_of(strategy);
  const double share = 1.0 / static_cast<double>(pairs.size());
  for (const Pair& p : pairs) {
    const CoralResult c = coral_loss_with_grad(stack(batch, p.a), stack(batch, p.b));
    r.coral_term += share * c.loss;
    scatter(r.grads, p.a, c.grad_source, lambda * share);
    scatter(r.grads, p.b, c.grad_target, lambda * share);
  }
  r.loss = ce + lambda * r.coral_term;
  return r;
}

BatchCE batch_cross_entropy(const RowMatrix& logits, std::span<const int> labels) {
  const Eigen::Index n = logits.rows();
  if (static_cast<std::size_t>(n) != labels.size())
    throw ShapeError("cross-entropy: " + std::to_string(n) + " logit rows vs " + std::to_string(labels.size()) +
                     " labels");
  if (n == 0) throw ShapeError("cross-entropy over an empty batch");
  BatchCE r;
  r.grad.resize(n, logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols())
      throw IndexError("label " + std::to_string(y) + " outside [0, " + std::to_string(logits.cols()) + ")");
    const double mx = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
    const double z = e.sum();
    r.loss += std::log(z) - (logits(i, y) - mx);
    r.grad.row(i) = e / z;
    r.grad(i, y) -= 1.0;
  }
  r.loss /= static_cast<double>(n);
  r.grad /= static_cast<double>(n);
  return r;
}

MtlResult mtl_loss(const RowMatrix& word_logits, std::span<const int> word_labels, const RowMatrix& domain_logits,
                   std::span<const int> domain_labels, double lambda) {
  if (word_logits.rows() != domain_logits.rows())
    throw ShapeError("MTL word and domain batches differ in size");
  BatchCE w = batch_cross_entropy(word_logits, word_labels);
  BatchCE d = batch_cross_entropy(domain_logits, domain_labels);
  MtlResult r;
  r.word_ce = w.loss;
  r.domain_ce = d.loss;
  r.loss = w.loss + lambda * d.loss;
  r.grad_word_logits = std::move(w.grad);
  r.grad_domain_logits = lambda * d.grad;
  return r;
}

std::string_view to_string(LossMode m) {
  switch (m) {
    case LossMode::CrossEntropy: return "ce";
    case LossMode::Coral: return "coral";
    case LossMode::Mtl: return "mtl";
  }
  return "?";
}

LossMode parse_loss_mode(std::string_view text) {
  for (auto m : {LossMode::CrossEntropy, LossMode::Coral, LossMode::Mtl})
    if (text == to_string(m)) return m;
  throw ConfigError("unknown loss mode '" + std::string(text) + "' (expected ce, coral or mtl)");
}

}  // namespace fkws
