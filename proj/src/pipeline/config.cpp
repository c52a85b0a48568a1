#include <fkws/errors.hpp>
#include <fkws/pipeline.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fkws {

LossMode ExperimentConfig::resolved_loss_mode() const {
  if (loss_mode) return *loss_mode;
  if (variant == Variant::Mtl) return LossMode::Mtl;
  if (strategy) return LossMode::Coral;
  return LossMode::CrossEntropy;
}

double ExperimentConfig::effective_lambda() const {
  if (lambda) return *lambda;
  switch (resolved_loss_mode()) {
    case LossMode::Coral: return kDefaultCoralLambda;
    case LossMode::Mtl: return kDefaultMtlLambda;
    case LossMode::CrossEntropy: break;
  }
  return 0.0;
}

LossConfig ExperimentConfig::loss() const {
  return {resolved_loss_mode(), strategy.value_or(CoralStrategy::S1), effective_lambda()};
}

std::filesystem::path ExperimentConfig::train_manifest() const {
  return paths.train_manifest.empty() ? paths.root / "corpus" / "train.jsonl" : paths.train_manifest;
}
std::filesystem::path ExperimentConfig::test_manifest() const {
  return paths.test_manifest.empty() ? paths.root / "corpus" / "test.jsonl" : paths.test_manifest;
}
std::filesystem::path ExperimentConfig::model_path() const {
  return paths.model.empty() ? paths.root / "models" / "kws.ckpt" : paths.model;
}
std::filesystem::path ExperimentConfig::domain_net_path() const {
  return paths.domain_net.empty() ? paths.root / "models" / "domain.ckpt" : paths.domain_net;
}

namespace {

// ---- value codecs --------------------------------------------------------------

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}
std::string fmt(std::size_t v) { return std::to_string(v); }

[[noreturn]] void bad(const std::string& key, const std::string& text, const char* expected) {
  throw ConfigError(key + " = '" + text + "': expected " + expected);
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size() || !std::isfinite(v)) bad(key, text, "a number");
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) bad(key, text, "a nonnegative integer");
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
  }
  return out;
}

// ---- schema ---------------------------------------------------------------------

struct Field {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename Member>
Field size_field(std::string section, std::string key, Member member) {
  const std::string name = section + "." + key;
  return {std::move(section), std::move(key),
          [member, name](ExperimentConfig& c, const std::string& t) { member(c) = static_cast<std::size_t>(to_u64(name, t)); },
          [member](const ExperimentConfig& c) { return fmt(member(c)); }};
}

template <typename Member>
Field real_field(std::string section, std::string key, Member member) {
  const std::string name = section + "." + key;
  return {std::move(section), std::move(key),
          [member, name](ExperimentConfig& c, const std::string& t) { member(c) = to_double(name, t); },
          [member](const ExperimentConfig& c) { return fmt(member(c)); }};
}

template <typename Member>
Field path_field(std::string section, std::string key, Member member) {
  return {std::move(section), std::move(key),
          [member](ExperimentConfig& c, const std::string& t) { member(c) = t; },
          [member](const ExperimentConfig& c) { return member(c).string(); }};
}

#define FKWS_REF(expr) [](auto& c) -> auto& { return expr; }

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    // [frontend]
    f.push_back(real_field("frontend", "preemphasis", FKWS_REF(c.frontend.preemphasis)));
    f.push_back(size_field("frontend", "frame_length", FKWS_REF(c.frontend.frame_length)));
    f.push_back(size_field("frontend", "frame_shift", FKWS_REF(c.frontend.frame_shift)));
    f.push_back(size_field("frontend", "fft_size", FKWS_REF(c.frontend.fft_size)));
    f.push_back(size_field("frontend", "num_bins", FKWS_REF(c.frontend.num_bins)));
    f.push_back(real_field("frontend", "low_hz", FKWS_REF(c.frontend.low_hz)));
    f.push_back(real_field("frontend", "high_hz", FKWS_REF(c.frontend.high_hz)));
    f.push_back(real_field("frontend", "log_floor", FKWS_REF(c.frontend.log_floor)));
    // [model]
    f.push_back({"model", "variant", [](ExperimentConfig& c, const std::string& t) { c.variant = parse_variant(t); },
                 [](const ExperimentConfig& c) { return std::string(to_string(c.variant)); }});
    f.push_back({"model", "channels",
                 [](ExperimentConfig& c, const std::string& t) {
                   const auto items = split_list(t);
                   if (items.size() != 3) bad("model.channels", t, "three comma-separated counts");
                   for (std::size_t i = 0; i < 3; ++i) c.model.channels[i] = to_u64("model.channels", items[i]);
                 },
                 [](const ExperimentConfig& c) {
                   return fmt(c.model.channels[0]) + "," + fmt(c.model.channels[1]) + "," + fmt(c.model.channels[2]);
                 }});
    f.push_back(size_field("model", "fc1_width", FKWS_REF(c.model.fc1_width)));
    f.push_back(size_field("model", "embedding_dim", FKWS_REF(c.model.embedding_dim)));
    f.push_back(size_field("model", "words", FKWS_REF(c.words)));
    // [loss]
    f.push_back({"loss", "mode", [](ExperimentConfig& c, const std::string& t) { c.loss_mode = parse_loss_mode(t); },
                 [](const ExperimentConfig& c) { return std::string(to_string(c.resolved_loss_mode())); }});
    f.push_back({"loss", "strategy",
                 [](ExperimentConfig& c, const std::string& t) {
                   if (t.empty()) c.strategy.reset();
                   else c.strategy = parse_strategy(t);
                 },
                 [](const ExperimentConfig& c) { return c.strategy ? std::string(to_string(*c.strategy)) : ""; }});
    f.push_back({"loss", "lambda", [](ExperimentConfig& c, const std::string& t) { c.lambda = to_double("loss.lambda", t); },
                 [](const ExperimentConfig& c) { return fmt(c.effective_lambda()); }});
    // [train]
    f.push_back(real_field("train", "lr0", FKWS_REF(c.train.lr0)));
    f.push_back(real_field("train", "momentum", FKWS_REF(c.train.momentum)));
    f.push_back(size_field("train", "batch", FKWS_REF(c.train.batch)));
    f.push_back(size_field("train", "max_epochs", FKWS_REF(c.train.max_epochs)));
    f.push_back(size_field("train", "plateau_patience", FKWS_REF(c.train.plateau_patience)));
    f.push_back(real_field("train", "plateau_factor", FKWS_REF(c.train.plateau_factor)));
    f.push_back(real_field("train", "plateau_min_delta", FKWS_REF(c.train.plateau_min_delta)));
    f.push_back(size_field("train", "early_stop_patience", FKWS_REF(c.train.early_stop_patience)));
    f.push_back(size_field("train", "checkpoint_every", FKWS_REF(c.train.checkpoint_every)));
    f.push_back(path_field("train", "checkpoint_dir", FKWS_REF(c.train.checkpoint_dir)));
    f.push_back(size_field("train", "negatives_per_clip", FKWS_REF(c.negatives_per_clip)));
    f.push_back({"train", "domains",
                 [](ExperimentConfig& c, const std::string& t) {
                   c.train_domains.clear();
                   for (const std::string& item : split_list(t)) {
                     try {
                       c.train_domains.push_back(parse_domain(item));
                     } catch (const Error&) {
                       bad("train.domains", t, "a list of 0.25m, 1m, 3m");
                     }
                   }
                 },
                 [](const ExperimentConfig& c) {
                   std::string s;
                   for (DomainTag d : c.train_domains) s += (s.empty() ? "" : ",") + std::string(to_string(d));
                   return s;
                 }});
    f.push_back(size_field("train", "domain_batch", FKWS_REF(c.domain_batch)));
    f.push_back(size_field("train", "domain_max_epochs", FKWS_REF(c.domain_max_epochs)));
    f.push_back(size_field("train", "domain_max_clips", FKWS_REF(c.domain_max_clips)));
    // [detect]
    f.push_back(size_field("detect", "smoothing", FKWS_REF(c.detect.smoothing)));
    f.push_back(size_field("detect", "window", FKWS_REF(c.detect.window)));
    f.push_back(real_field("detect", "threshold", FKWS_REF(c.detect.threshold)));
    f.push_back(size_field("detect", "grid_points", FKWS_REF(c.grid_points)));
    f.push_back(real_field("detect", "target_fa", FKWS_REF(c.target_fa)));
    // [synth]
    f.push_back(size_field("synth", "train_positives", FKWS_REF(c.synth.train_positives)));
    f.push_back(size_field("synth", "train_negatives", FKWS_REF(c.synth.train_negatives)));
    f.push_back(size_field("synth", "test_positives", FKWS_REF(c.synth.test_positives)));
    f.push_back(size_field("synth", "test_negatives", FKWS_REF(c.synth.test_negatives)));
    f.push_back(real_field("synth", "clip_seconds", FKWS_REF(c.synth.clip_seconds)));
    f.push_back(real_field("synth", "noise_floor_std", FKWS_REF(c.synth.noise_floor_std)));
    // [paths]
    f.push_back(path_field("paths", "root", FKWS_REF(c.paths.root)));
    f.push_back(path_field("paths", "train_manifest", FKWS_REF(c.paths.train_manifest)));
    f.push_back(path_field("paths", "test_manifest", FKWS_REF(c.paths.test_manifest)));
    f.push_back(path_field("paths", "domain_net", FKWS_REF(c.paths.domain_net)));
    f.push_back(path_field("paths", "model", FKWS_REF(c.paths.model)));
    // [run]
    f.push_back({"run", "seed",
                 [](ExperimentConfig& c, const std::string& t) {
                   c.seed = to_u64("run.seed", t);
                   c.train.seed = c.seed;
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
    return f;
  }();
  return fields;
}

#undef FKWS_REF

}  // namespace

void validate_config(const ExperimentConfig& c) {
  const double lambda = c.effective_lambda();
  if (!(lambda >= 0.0)) throw ConfigError("loss.lambda must be >= 0");
  const LossMode mode = c.resolved_loss_mode();
  if ((mode == LossMode::Mtl) != (c.variant == Variant::Mtl))
    throw ConfigError("loss.mode mtl and model.variant mtl go together");
  if (mode == LossMode::Mtl && c.strategy) throw ConfigError("the mtl variant does not take a CORAL strategy");
  if (mode == LossMode::Coral) {
    if (!c.strategy) throw ConfigError("loss.mode coral needs loss.strategy");
    if (c.variant != Variant::Baseline) throw ConfigError("CORAL training uses the baseline variant");
  }
  if (mode == LossMode::CrossEntropy && c.strategy) throw ConfigError("loss.strategy is only used by loss.mode coral");
  if (uses_embedding(c.variant) && c.paths.domain_net.empty())
    throw ConfigError(std::string(to_string(c.variant)) + " needs paths.domain_net");
  if (c.words == 0) throw ConfigError("model.words must be >= 1");
  if (c.train_domains.empty()) throw ConfigError("train.domains must name at least one domain");
  if (c.grid_points < 2) throw ConfigError("detect.grid_points must be >= 2");
  if (!(c.target_fa > 0.0)) throw ConfigError("detect.target_fa must be positive");
  if (c.domain_batch == 0) throw ConfigError("train.domain_batch must be positive");
  if (c.synth.clip_seconds <= 0.0) throw ConfigError("synth.clip_seconds must be positive");
  c.train.validate();
  c.detect.validate(KeywordSpec::sequential(c.words));
}

ExperimentConfig parse_config_text(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  std::map<std::string, const Field*> index;
  for (const Field& f : schema()) index[f.section + "." + f.key] = &f;

  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' must sit inside a [section]");
    for (const auto& [key, value] : body) {
      const auto it = index.find(section + "." + key);
      if (it == index.end()) throw ConfigError("unknown config key [" + section + "] " + key);
      it->second->set(c, value.data());
    }
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

std::string emit_config(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const Field& f : schema()) {
    if (f.section != section) {
      out += (section.empty() ? "" : "\n") + ("[" + f.section + "]\n");
      section = f.section;
    }
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

}  // namespace fkws
