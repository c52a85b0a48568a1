#include "../binio.hpp"

#include <fkws/errors.hpp>
#include <fkws/models.hpp>

#include <fstream>
#include <map>

namespace fkws {
namespace {

using Records = std::map<std::string, Tensor>;

void write_records(std::ostream& os, const std::vector<const Parameter*>& params) {
  for (const Parameter* p : params) {
    binio::put_u32(os, static_cast<std::uint32_t>(p->name.size()));
    binio::put_bytes(os, p->name);
    binio::put_u32(os, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) binio::put_u32(os, static_cast<std::uint32_t>(d));
    for (double v : p->value.data()) binio::put_f32(os, static_cast<float>(v));
  }
}

void write_file(const std::filesystem::path& path, std::uint8_t tag, std::uint32_t m,
                const std::vector<const Parameter*>& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  binio::put_bytes(os, "FKWSMODL");
  binio::put_u32(os, kCheckpointVersion);
  binio::put_u8(os, tag);
  binio::put_u32(os, m);
  write_records(os, params);
  if (!os) throw IoError("write failed for " + path.string());
}

struct Header {
  std::uint8_t tag;
  std::uint32_t m;
  Records records;
};

Header read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  try {
    binio::expect_magic(is, "FKWSMODL");
    const auto version = binio::get_u32(is);
    if (version != kCheckpointVersion) throw FormatError("checkpoint version " + std::to_string(version));
    Header h{binio::get_u8(is), binio::get_u32(is), {}};
    while (is.peek() != std::char_traits<char>::eof()) {
      const auto name_len = binio::get_u32(is);
      if (name_len > 4096) throw FormatError("implausible parameter name length");
      std::string name = binio::get_bytes(is, name_len);
      const auto rank = binio::get_u32(is);
      if (rank == 0 || rank > 8) throw FormatError("implausible rank for " + name);
      Shape shape(rank);
      for (auto& d : shape) d = binio::get_u32(is);
      Tensor t(shape);
      for (double& v : t.data()) v = binio::get_f32(is);
      h.records.emplace(std::move(name), std::move(t));
    }
    return h;
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

const Tensor& record(const Records& r, const std::string& name) {
  const auto it = r.find(name);
  if (it == r.end()) throw FormatError("checkpoint is missing parameter '" + name + "'");
  return it->second;
}

void assign(std::vector<Parameter*> params, const Records& records) {
  if (params.size() != records.size())
    throw FormatError("checkpoint holds " + std::to_string(records.size()) + " parameters, expected " +
                      std::to_string(params.size()));
  for (Parameter* p : params) {
    const Tensor& t = record(records, p->name);
    if (t.shape() != p->value.shape())
      throw FormatError("parameter '" + p->name + "' has shape " + shape_string(t.shape()) + ", expected " +
                        shape_string(p->value.shape()));
    p->value = t;
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const KeywordNet& net) {
  write_file(path, static_cast<std::uint8_t>(net.variant), static_cast<std::uint32_t>(net.words), net.parameters());
}

void save_checkpoint(const std::filesystem::path& path, const DomainNet& net) {
  write_file(path, kDomainNetTag, static_cast<std::uint32_t>(net.config.classes), net.parameters());
}

KeywordNet load_keyword_checkpoint(const std::filesystem::path& path) {
  const Header h = read_file(path);
  if (h.tag > static_cast<std::uint8_t>(Variant::Mtl))
    throw FormatError(path.string() + ": not a keyword-net checkpoint (tag " + std::to_string(h.tag) + ")");
  const auto variant = static_cast<Variant>(h.tag);

  KeywordNetConfig cfg;
  for (std::size_t s = 0; s < 3; ++s) cfg.channels[s] = record(h.records, "conv" + std::to_string(s + 1) + ".weight").dim(0);
  const Tensor& fc1 = record(h.records, "fc1.weight");
  cfg.fc1_width = fc1.dim(0);
  const std::size_t side = conv_stack_side(cfg.input_size);
  if (variant == Variant::Emb1) cfg.embedding_dim = record(h.records, "out.weight").dim(1) - cfg.fc1_width;
  if (variant == Variant::Emb2) cfg.embedding_dim = fc1.dim(1) - side * side * cfg.channels[2];

  KeywordNet net = build_keyword_net(variant, h.m, 0, cfg);
  assign(net.parameters(), h.records);
  return net;
}

DomainNet load_domain_checkpoint(const std::filesystem::path& path) {
  const Header h = read_file(path);
  if (h.tag != kDomainNetTag) throw FormatError(path.string() + ": not a domain-net checkpoint");
  DomainNetConfig cfg;
  const Tensor& w1 = record(h.records, "lstm1.w_input");
  cfg.hidden = w1.dim(0) / 4;
  cfg.input_dim = w1.dim(1);
  cfg.classes = h.m;
  DomainNet net = build_domain_net(0, cfg);
  assign(net.parameters(), h.records);
  net.freeze();
  return net;
}

}  // namespace fkws
