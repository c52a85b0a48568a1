#include "../binio.hpp"

#include <fkws/errors.hpp>
#include <fkws/ingest.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace fkws {

void validate(const AudioClip& clip) {
  if (clip.sample_rate != kSampleRate)
    throw ValidationError("sample rate must be 16000 Hz, got " + std::to_string(clip.sample_rate));
  if (clip.samples.empty()) throw ValidationError("clip '" + clip.clip_id + "' has no samples");
  for (double s : clip.samples)
    if (!(std::abs(s) <= 1.0)) throw ValidationError("clip '" + clip.clip_id + "' has samples outside [-1,1]");
}

namespace {

std::uint16_t get_u16(std::istream& is) {
  const auto lo = binio::get_u8(is);
  const auto hi = binio::get_u8(is);
  return static_cast<std::uint16_t>(lo | (hi << 8));
}

void put_u16(std::ostream& os, std::uint16_t v) {
  binio::put_u8(os, static_cast<std::uint8_t>(v & 0xff));
  binio::put_u8(os, static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());

  try {
    if (binio::get_bytes(is, 4) != "RIFF") throw FormatError("not a RIFF file");
    binio::get_u32(is);
    if (binio::get_bytes(is, 4) != "WAVE") throw FormatError("not a WAVE file");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    while (true) {
      if (is.peek() == std::char_traits<char>::eof()) break;
      const std::string id = binio::get_bytes(is, 4);
      const std::uint32_t size = binio::get_u32(is);
      if (id == "fmt ") {
        if (size < 16) throw FormatError("fmt chunk too small");
        format = get_u16(is);
        channels = get_u16(is);
        rate = binio::get_u32(is);
        binio::get_u32(is);  // byte rate
        get_u16(is);         // block align
        bits = get_u16(is);
        is.seekg(size - 16 + (size & 1), std::ios::cur);
        have_fmt = true;
      } else if (id == "data") {
        if (!have_fmt) throw FormatError("data chunk before fmt chunk");
        if (format != 1 || bits != 16)
          throw UnsupportedFormatError(path.string() + ": only PCM16 is supported");
        if (channels != 1)
          throw UnsupportedFormatError(path.string() + ": expected mono, got " + std::to_string(channels) + " channels");
        if (rate != static_cast<std::uint32_t>(kSampleRate))
          throw UnsupportedFormatError(path.string() + ": expected 16000 Hz, got " + std::to_string(rate));
        if (size % 2 != 0) throw FormatError("odd data chunk size");
        AudioClip clip;
        clip.clip_id = path.stem().string();
        clip.samples.resize(size / 2);
        for (auto& s : clip.samples) s = static_cast<std::int16_t>(get_u16(is)) / 32768.0;
        return clip;
      } else {
        is.seekg(size + (size & 1), std::ios::cur);
      }
      if (!is) break;
    }
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  throw FormatError(path.string() + ": no data chunk");
}

void write_wav(const std::filesystem::path& path, std::span<const double> samples, int sample_rate) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  binio::put_bytes(os, "RIFF");
  binio::put_u32(os, 36 + data_bytes);
  binio::put_bytes(os, "WAVEfmt ");
  binio::put_u32(os, 16);
  put_u16(os, 1);
  put_u16(os, 1);
  binio::put_u32(os, static_cast<std::uint32_t>(sample_rate));
  binio::put_u32(os, static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(os, 2);
  put_u16(os, 16);
  binio::put_bytes(os, "data");
  binio::put_u32(os, data_bytes);
  for (double s : samples) {
    const long q = std::clamp(std::lround(s * 32768.0), -32768L, 32767L);
    put_u16(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace fkws
