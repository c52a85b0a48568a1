#pragma once

// Finite-difference gradient suites over the netcore ops and every trainable
// variant at reduced widths.

#include "oracles.hpp"

#include <fkws/losses.hpp>
#include <fkws/models.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace fkws::testing {

struct NamedReport {
  std::string name;
  oracle::GradReport report;
};

/// conv2d, maxpool2, linear, relu, softmax_ce, lstm_layer, mean_pool_time,
/// concat, covariance and coral_loss.
std::vector<NamedReport> netcore_gradient_suite(std::uint64_t seed);

/// End-to-end keyword objectives: Baseline, EMB1, EMB2, MTL and CORAL S1..S5,
/// plus the domain classifier.
std::vector<NamedReport> model_gradient_suite(std::uint64_t seed);

/// Keyword net small enough for exhaustive finite differences: a 22x22
/// input collapses to a 1x1 map after three conv/pool stages.
KeywordNetConfig tiny_keyword_config();

}  // namespace fkws::testing
