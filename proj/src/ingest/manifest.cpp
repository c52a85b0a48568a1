#include <fkws/errors.hpp>
#include <fkws/ingest.hpp>

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace fkws {
namespace {

using nlohmann::json;

ManifestEntry parse_line(const std::string& line, std::size_t line_no, std::size_t word_count) {
  const std::string where = "manifest line " + std::to_string(line_no);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(where + ": invalid JSON (" + e.what() + ")");
  }
  if (!j.is_object()) throw ParseError(where + ": expected a JSON object");

  auto field = [&](const char* name) -> const json& {
    if (!j.contains(name)) throw ParseError(where + ": missing field '" + name + "'");
    return j.at(name);
  };
  auto text = [&](const char* name) {
    const json& v = field(name);
    if (!v.is_string()) throw ParseError(where + ": field '" + name + "' must be a string");
    return v.get<std::string>();
  };

  ManifestEntry e;
  e.path = text("path");
  try {
    e.domain = parse_domain(text("domain"));
    e.polarity = parse_polarity(text("polarity"));
  } catch (const ParseError& err) {
    throw ParseError(where + ": " + err.what());
  }

  if (e.polarity == Polarity::Positive) {
    const json& ends = field("ends");
    if (!ends.is_array()) throw ParseError(where + ": field 'ends' must be an array");
    for (const auto& v : ends) {
      if (!v.is_number_integer()) throw ParseError(where + ": 'ends' must hold integers");
      e.word_end_frames.push_back(v.get<int>());
    }
    if (e.word_end_frames.size() != word_count)
      throw ValidationError(where + ": expected " + std::to_string(word_count) + " end frames, got " +
                            std::to_string(e.word_end_frames.size()));
    for (std::size_t i = 0; i < e.word_end_frames.size(); ++i) {
      if (e.word_end_frames[i] < 0) throw ValidationError(where + ": negative end frame");
      if (i > 0 && e.word_end_frames[i] <= e.word_end_frames[i - 1])
        throw ValidationError(where + ": end frames must be strictly increasing");
    }
  } else if (j.contains("ends") && !(j["ends"].is_array() && j["ends"].empty())) {
    throw ValidationError(where + ": negative entries carry no end frames");
  }
  return e;
}

}  // namespace

std::vector<ManifestEntry> parse_manifest_text(const std::string& text, std::size_t word_count) {
  std::vector<ManifestEntry> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    entries.push_back(parse_line(line, line_no, word_count));
  }
  return entries;
}

std::vector<ManifestEntry> parse_manifest(const std::filesystem::path& path, std::size_t word_count) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  try {
    return parse_manifest_text(buf.str(), word_count);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string manifest_line(const ManifestEntry& e) {
  // ordered_json keeps the documented field order in the output
  nlohmann::ordered_json j;
  j["path"] = e.path;
  j["domain"] = std::string(to_string(e.domain));
  j["polarity"] = std::string(to_string(e.polarity));
  if (e.polarity == Polarity::Positive) j["ends"] = e.word_end_frames;
  return j.dump();
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& e : entries) os << manifest_line(e) << '\n';
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace fkws
