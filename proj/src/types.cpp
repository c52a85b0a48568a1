#include <fkws/errors.hpp>
#include <fkws/types.hpp>

namespace fkws {

std::string_view to_string(DomainTag d) {
  switch (d) {
    case DomainTag::D025: return "0.25m";
    case DomainTag::D1M: return "1m";
    case DomainTag::D3M: return "3m";
  }
  return "?";
}

DomainTag parse_domain(std::string_view text) {
  if (text == "0.25m") return DomainTag::D025;
  if (text == "1m") return DomainTag::D1M;
  if (text == "3m") return DomainTag::D3M;
  throw ParseError("unknown domain '" + std::string(text) + "'");
}

std::string_view to_string(Polarity p) {
  return p == Polarity::Positive ? "positive" : "negative";
}

Polarity parse_polarity(std::string_view text) {
  if (text == "positive") return Polarity::Positive;
  if (text == "negative") return Polarity::Negative;
  throw ParseError("unknown polarity '" + std::string(text) + "'");
}

}  // namespace fkws
