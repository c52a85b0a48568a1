#pragma once

#include <fkws/types.hpp>

#include <string>
#include <vector>

namespace fkws {

inline constexpr int kSampleRate = 16000;

struct AudioClip {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = kSampleRate;
  std::string clip_id;
  DomainTag domain = DomainTag::D025;
  Polarity polarity = Polarity::Negative;

  double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Throws ValidationError unless rate is 16 kHz, samples nonempty and |x| <= 1.
void validate(const AudioClip& clip);

}  // namespace fkws
