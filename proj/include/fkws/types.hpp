#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace fkws {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Recording distance. D025 is the close-talking source domain; D1M and D3M
/// are the far-field targets.
enum class DomainTag : std::uint8_t { D025 = 0, D1M = 1, D3M = 2 };

inline constexpr std::array<DomainTag, 3> kAllDomains{DomainTag::D025, DomainTag::D1M,
                                                      DomainTag::D3M};
inline constexpr std::size_t kNumDomains = 3;

inline constexpr bool is_source(DomainTag d) { return d == DomainTag::D025; }
inline constexpr std::size_t index_of(DomainTag d) { return static_cast<std::size_t>(d); }

/// "0.25m" | "1m" | "3m"
std::string_view to_string(DomainTag d);
/// Throws ParseError for anything other than the three manifest spellings.
DomainTag parse_domain(std::string_view text);

enum class Polarity : std::uint8_t { Negative = 0, Positive = 1 };

std::string_view to_string(Polarity p);
Polarity parse_polarity(std::string_view text);

}  // namespace fkws
