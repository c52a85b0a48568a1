#pragma once

#include <stdexcept>
#include <string>

namespace fkws {

/// Base of every error raised by the library. `kind()` is a stable,
/// machine-parseable tag used by the CLI's one-line error output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define FKWS_DEFINE_ERROR(Name, tag)                                   \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(tag, what) {}      \
  };

// configuration / usage
FKWS_DEFINE_ERROR(ConfigError, "config")
FKWS_DEFINE_ERROR(UsageError, "usage")
// data
FKWS_DEFINE_ERROR(FormatError, "format")
FKWS_DEFINE_ERROR(UnsupportedFormatError, "unsupported-format")
FKWS_DEFINE_ERROR(ParseError, "parse")
FKWS_DEFINE_ERROR(ValidationError, "validation")
FKWS_DEFINE_ERROR(TooShortError, "too-short")
FKWS_DEFINE_ERROR(IoError, "io")
// numerics
FKWS_DEFINE_ERROR(ShapeError, "shape")
FKWS_DEFINE_ERROR(IndexError, "index")
FKWS_DEFINE_ERROR(DegenerateBatchError, "degenerate-batch")
FKWS_DEFINE_ERROR(DivergenceError, "divergence")
// detection
FKWS_DEFINE_ERROR(WindowTooShortError, "window-too-short")
FKWS_DEFINE_ERROR(SequenceTooShortError, "sequence-too-short")
FKWS_DEFINE_ERROR(OracleRangeError, "oracle-range")

#undef FKWS_DEFINE_ERROR

}  // namespace fkws
