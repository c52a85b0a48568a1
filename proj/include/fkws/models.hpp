#pragma once

// Keyword CNN (Baseline / EMB1 / EMB2 / MTL) and the LSTM domain classifier.
//
// Keyword shape trace for a 1x40x40 window, valid 3x3 convs and 2x2 pools:
//   40 -> conv 38 -> pool 19 -> conv 17 -> pool 8 -> conv 6 -> pool 3
// so the flattened conv output is 3*3*C3 (288 for C3 = 32).

#include <fkws/dsp.hpp>
#include <fkws/netcore.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace fkws {

enum class Variant : std::uint8_t { Baseline = 0, Emb1 = 1, Emb2 = 2, Mtl = 3 };

std::string_view to_string(Variant v);
/// "baseline" | "emb1" | "emb2" | "mtl"
Variant parse_variant(std::string_view text);
inline constexpr bool uses_embedding(Variant v) { return v == Variant::Emb1 || v == Variant::Emb2; }

struct KeywordNetConfig {
  std::array<std::size_t, 3> channels{32, 32, 32};
  std::size_t fc1_width = 128;
  std::size_t embedding_dim = 64;
  std::size_t input_size = 40;  // square window: frames == bins
};

/// Spatial side after the three conv/pool stages (3 for 40x40 input).
std::size_t conv_stack_side(std::size_t input_size);

struct KeywordNet {
  Variant variant = Variant::Baseline;
  std::size_t words = 3;  // M; the output layer has M + 1 classes
  KeywordNetConfig config;

  std::array<Parameter, 3> conv_w;
  std::array<Parameter, 3> conv_b;
  Parameter fc1_w, fc1_b;
  Parameter out_w, out_b;
  Parameter domain_w, domain_b;  // MTL only

  std::size_t flatten_width() const;
  std::size_t fc1_input_width() const;
  std::size_t out_input_width() const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();
};

/// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) weights, zero biases.
KeywordNet build_keyword_net(Variant variant, std::size_t words, std::uint64_t seed,
                             const KeywordNetConfig& config = {});

struct DomainEmbedding {
  Tensor values;
};

struct ForwardRecord {
  Tensor word_logits;                  // [M+1]
  std::optional<Tensor> domain_logits; // [3], MTL only
  Tensor feature_layer;                // fc1 post-ReLU output
};

/// Everything backward_keyword needs.
struct KeywordTrace {
  ForwardRecord record;
  std::array<Tensor, 3> stage_input;
  std::array<Tensor, 3> conv_out;  // pre-ReLU
  std::array<Shape, 3> pool_in_shape;
  std::array<std::vector<std::size_t>, 3> pool_argmax;
  Tensor fc1_in;
  Tensor fc1_pre;
  Tensor out_in;
};

/// Throws ConfigError when an embedding is given to a variant that does not
/// take one, or missing for EMB1/EMB2.
KeywordTrace forward_keyword_trace(const KeywordNet& net, const RowMatrix& window,
                                   const DomainEmbedding* embedding = nullptr);
ForwardRecord forward_keyword(const KeywordNet& net, const RowMatrix& window,
                              const DomainEmbedding* embedding = nullptr);

/// Accumulates parameter gradients. grad_domain_logits is required for MTL
/// nets when given; grad_feature (from CORAL) is added at the fc1 output.
void backward_keyword(KeywordNet& net, const KeywordTrace& trace, const Tensor& grad_word_logits,
                      const Tensor* grad_domain_logits = nullptr, const Tensor* grad_feature = nullptr);

/// Word posteriors for every frame whose 40-frame window fits: row j is the
/// softmax output for the window anchored at frame j + 20. Returns an empty
/// matrix when the utterance is shorter than 40 frames.
RowMatrix frame_posteriors(const KeywordNet& net, const FeatureMatrix& features,
                           const DomainEmbedding* embedding = nullptr);

// ---- domain classifier ---------------------------------------------------------

struct DomainNetConfig {
  std::size_t input_dim = kNumMelBins;
  std::size_t hidden = 64;
  std::size_t classes = kNumDomains;
};

struct DomainNet {
  DomainNetConfig config;
  std::array<Parameter, 2> lstm_w_input;
  std::array<Parameter, 2> lstm_w_recurrent;
  std::array<Parameter, 2> lstm_bias;
  Parameter out_w, out_b;
  bool frozen = false;

  void freeze() { frozen = true; }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();
};

DomainNet build_domain_net(std::uint64_t seed, const DomainNetConfig& config = {});

struct DomainTrace {
  Tensor inputs;
  std::array<LstmTrace, 2> layers;
  Tensor pooled;  // the embedding
  Tensor logits;
};

DomainTrace forward_domain(const DomainNet& net, const FeatureMatrix& features);
void backward_domain(DomainNet& net, const DomainTrace& trace, const Tensor& grad_logits);

/// Mean-pooled top-layer LSTM states. Throws UsageError unless net.frozen.
DomainEmbedding extract_domain_embedding(const DomainNet& net, const FeatureMatrix& features);

// ---- checkpoints -----------------------------------------------------------------
//
// "FKWSMODL", u32 version, u8 variant tag (4 = domain net), u32 M, then until
// end of file one record per parameter: u32 name length, name, u32 rank,
// rank x u32 dims, f32 LE values. Values round-trip exactly at 32-bit precision.

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint8_t kDomainNetTag = 4;

void save_checkpoint(const std::filesystem::path& path, const KeywordNet& net);
void save_checkpoint(const std::filesystem::path& path, const DomainNet& net);
KeywordNet load_keyword_checkpoint(const std::filesystem::path& path);
/// The returned net is frozen.
DomainNet load_domain_checkpoint(const std::filesystem::path& path);

}  // namespace fkws
