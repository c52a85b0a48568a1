#pragma once

#include <fkws/types.hpp>

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace fkws {

// ---- covariance / CORAL -------------------------------------------------------

/// C = (D^T D - (1/n) (1^T D)^T (1^T D)) / (n - 1) for an n x d matrix, n >= 2.
RowMatrix covariance(const RowMatrix& d);

/// dL/dD given dL/dC.
RowMatrix covariance_backward(const RowMatrix& d, const RowMatrix& grad_cov);

struct CoralResult {
  double loss = 0.0;
  RowMatrix grad_source;
  RowMatrix grad_target;
};

/// ||C_S - C_T||_F^2 / (4 d^2)
double coral_loss(const RowMatrix& source, const RowMatrix& target);
CoralResult coral_loss_with_grad(const RowMatrix& source, const RowMatrix& target);

// ---- strategies ---------------------------------------------------------------

/// S1: (0.25m, 1m)   S2: (0.25m, 3m)   S3: (0.25m, 1m+3m stacked)
/// S4: mean of S1,S2 S5: mean of (0.25m,1m), (0.25m,3m), (1m,3m)
enum class CoralStrategy : std::uint8_t { S1 = 1, S2, S3, S4, S5 };

std::string_view to_string(CoralStrategy s);
/// "s1" .. "s5"
CoralStrategy parse_strategy(std::string_view text);
std::vector<DomainTag> domains_needed(CoralStrategy s);

/// Feature-layer rows of one minibatch, partitioned by domain. An empty
/// (0-row) matrix means the domain is absent from the batch.
struct CoralBatch {
  std::array<RowMatrix, kNumDomains> features;

  RowMatrix& operator[](DomainTag d) { return features[index_of(d)]; }
  const RowMatrix& operator[](DomainTag d) const { return features[index_of(d)]; }
};

struct JointCoralResult {
  double loss = 0.0;        // ce + lambda * coral_term
  double coral_term = 0.0;  // the strategy combination, unweighted
  /// lambda-weighted dL/dE per domain, same shapes as the batch matrices.
  std::array<RowMatrix, kNumDomains> grads;
};

/// Throws DegenerateBatchError naming the first referenced domain with fewer
/// than two rows.
JointCoralResult joint_coral_loss(CoralStrategy strategy, const CoralBatch& batch, double ce, double lambda);

// ---- cross-entropy / MTL ------------------------------------------------------

struct BatchCE {
  double loss = 0.0;  // batch mean
  RowMatrix grad;     // d(loss)/d(logits), rows already divided by B
};

/// Mean softmax cross-entropy over the rows of `logits`.
BatchCE batch_cross_entropy(const RowMatrix& logits, std::span<const int> labels);

struct MtlResult {
  double loss = 0.0;
  double word_ce = 0.0;
  double domain_ce = 0.0;
  RowMatrix grad_word_logits;
  RowMatrix grad_domain_logits;  // already scaled by lambda
};

/// CE_word + lambda * CE_domain, both batch means.
MtlResult mtl_loss(const RowMatrix& word_logits, std::span<const int> word_labels,
                   const RowMatrix& domain_logits, std::span<const int> domain_labels, double lambda);

// ---- configuration ------------------------------------------------------------

enum class LossMode : std::uint8_t { CrossEntropy, Coral, Mtl };

std::string_view to_string(LossMode m);
/// "ce" | "coral" | "mtl"
LossMode parse_loss_mode(std::string_view text);

inline constexpr double kDefaultCoralLambda = 0.8;
inline constexpr double kDefaultMtlLambda = 0.2;

struct LossConfig {
  LossMode mode = LossMode::CrossEntropy;
  CoralStrategy strategy = CoralStrategy::S1;
  double lambda = 0.0;

  static LossConfig cross_entropy() { return {}; }
  static LossConfig coral(CoralStrategy s, double lambda = kDefaultCoralLambda) { return {LossMode::Coral, s, lambda}; }
  static LossConfig mtl(double lambda = kDefaultMtlLambda) { return {LossMode::Mtl, CoralStrategy::S1, lambda}; }
};

}  // namespace fkws
