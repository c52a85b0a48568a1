#include <doctest.h>

#include <fkws/errors.hpp>
#include <fkws/ingest.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

using namespace fkws;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / "fkws_test_ingest";
  fs::create_directories(p);
  return p;
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}

// Hand-assembled RIFF bytes, independent of write_wav.
fs::path raw_wav(const std::string& name, std::uint16_t channels, std::uint32_t rate,
                 const std::vector<std::int16_t>& samples) {
  std::string data;
  for (std::int16_t v : samples) put_u16(data, static_cast<std::uint16_t>(v));
  std::string s = "RIFF";
  put_u32(s, static_cast<std::uint32_t>(36 + data.size()));
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, 1);
  put_u16(s, channels);
  put_u32(s, rate);
  put_u32(s, rate * channels * 2);
  put_u16(s, static_cast<std::uint16_t>(channels * 2));
  put_u16(s, 16);
  s += "data";
  put_u32(s, static_cast<std::uint32_t>(data.size()));
  s += data;
  const fs::path p = scratch_dir() / name;
  std::ofstream(p, std::ios::binary) << s;
  return p;
}

FeatureMatrix ramp_features(int frames) {
  FeatureMatrix f(frames, 40);
  for (int t = 0; t < frames; ++t) f.row(t).setConstant(t);
  return f;
}

}  // namespace

TEST_CASE("read_wav decodes zeros and full-scale PCM16") {
  const AudioClip zeros = read_wav(raw_wav("zeros.wav", 1, 16000, std::vector<std::int16_t>(16000, 0)));
  CHECK(zeros.samples.size() == 16000);
  CHECK(std::all_of(zeros.samples.begin(), zeros.samples.end(), [](double x) { return x == 0.0; }));

  const AudioClip peak = read_wav(raw_wav("peak.wav", 1, 16000, {32767, -32768}));
  CHECK(peak.samples[0] == 32767.0 / 32768.0);
  CHECK(peak.samples[1] == -1.0);
}

TEST_CASE("read_wav rejects stereo, other rates and non-RIFF input") {
  CHECK_THROWS_AS(read_wav(raw_wav("stereo.wav", 2, 16000, {0, 0, 0, 0})), UnsupportedFormatError);
  CHECK_THROWS_AS(read_wav(raw_wav("8k.wav", 1, 8000, {0, 0})), UnsupportedFormatError);
  const fs::path junk = scratch_dir() / "junk.wav";
  std::ofstream(junk, std::ios::binary) << "this is not audio at all, just text";
  CHECK_THROWS_AS(read_wav(junk), FormatError);
  CHECK_THROWS_AS(read_wav(scratch_dir() / "missing.wav"), IoError);
}

TEST_CASE("write_wav then read_wav round-trips quantized samples") {
  const std::vector<double> x{0.0, 0.5, -0.25, 1.0 / 32768.0, -1.0};
  const fs::path p = scratch_dir() / "rt.wav";
  write_wav(p, x);
  const AudioClip back = read_wav(p);
  REQUIRE(back.samples.size() == x.size());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(back.samples[i] == x[i]);
}

TEST_CASE("parse_manifest maps fields and validates ends") {
  const auto entries = parse_manifest_text(
      R"({"path":"a.wav","domain":"1m","polarity":"positive","ends":[50,80,110]})"
      "\n\n"
      R"({"path":"b.wav","domain":"0.25m","polarity":"negative"})"
      "\n");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].path == "a.wav");
  CHECK(entries[0].domain == DomainTag::D1M);
  CHECK(entries[0].polarity == Polarity::Positive);
  CHECK(entries[0].word_end_frames == std::vector<int>{50, 80, 110});
  CHECK(entries[1].word_end_frames.empty());

  CHECK_THROWS_AS(parse_manifest_text(R"({"path":"a.wav","domain":"1m","polarity":"positive","ends":[80,50,110]})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_manifest_text(R"({"path":"a.wav","domain":"1m","polarity":"positive","ends":[50,80]})"),
                  ValidationError);
  CHECK(parse_manifest_text("").empty());
}

TEST_CASE("manifest parse errors name the line") {
  const std::string text = R"({"path":"a.wav","domain":"1m","polarity":"negative"})"
                           "\n"
                           R"({"path":"b.wav","polarity":"negative"})";
  try {
    parse_manifest_text(text);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("domain") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_manifest_text(R"({"path":"a.wav","domain":"2m","polarity":"negative"})"), ParseError);
}

TEST_CASE("manifest lines round-trip") {
  const std::vector<ManifestEntry> entries{{"x/a.wav", DomainTag::D3M, Polarity::Positive, {41, 70, 99}},
                                           {"b.wav", DomainTag::D025, Polarity::Negative, {}}};
  const fs::path p = scratch_dir() / "m.jsonl";
  write_manifest(p, entries);
  CHECK(parse_manifest(p) == entries);
}

TEST_CASE("keyword windows follow the [e-20, e+19] rule and discard out-of-range words") {
  const FeatureMatrix f = ramp_features(60);
  const ManifestEntry e{"a.wav", DomainTag::D025, Polarity::Positive, {20, 30, 40}};
  const WindowSet ws = make_windows(f, e, 0, 1);
  // e = 20 -> [0, 39] fits, e = 30 -> [10, 49] fits, e = 40 -> [20, 59] fits
  REQUIRE(ws.windows.size() == 3);
  CHECK(ws.windows[0].word_label == 1);
  CHECK(ws.windows[0].features(0, 0) == 0.0);
  CHECK(ws.windows[0].features(39, 0) == 39.0);

  const ManifestEntry early{"a.wav", DomainTag::D025, Polarity::Positive, {10, 30, 41}};
  const WindowSet ws2 = make_windows(f, early, 0, 1);
  REQUIRE(ws2.windows.size() == 1);  // e = 10 reaches -10; e = 41 reaches 60
  CHECK(ws2.windows[0].word_label == 2);
}

TEST_CASE("negative clips give filler windows that are all in bounds") {
  const FeatureMatrix f = ramp_features(200);
  const ManifestEntry e{"n.wav", DomainTag::D1M, Polarity::Negative, {}};
  const WindowSet ws = make_windows(f, e, 3, 9);
  REQUIRE(ws.windows.size() == 3);
  for (const TrainingWindow& w : ws.windows) {
    CHECK(w.word_label == 0);
    CHECK(w.domain == DomainTag::D1M);
    CHECK(w.features.rows() == 40);
    CHECK(w.features.cols() == 40);
    // the ramp value of the first row is the first frame index
    CHECK(w.features(0, 0) == w.anchor - 20);
    CHECK(w.anchor - 20 >= 0);
    CHECK(w.anchor + 19 < 200);
  }
}

TEST_CASE("short features produce no windows and set the flag") {
  const WindowSet ws = make_windows(ramp_features(39), {"s.wav", DomainTag::D025, Polarity::Negative, {}}, 3, 1);
  CHECK(ws.too_short);
  CHECK(ws.windows.empty());
}

TEST_CASE("window invariants hold exhaustively over many positive layouts") {
  const FeatureMatrix f = ramp_features(158);
  for (int first = 5; first < 120; first += 3) {
    const ManifestEntry e{"p.wav", DomainTag::D025, Polarity::Positive, {first, first + 17, first + 35}};
    const WindowSet ws = make_windows(f, e, 4, static_cast<std::uint64_t>(first));
    std::size_t keyword = 0, fitting = 0;
    for (int end : e.word_end_frames) fitting += (end - 20 >= 0 && end + 19 < 158) ? 1 : 0;
    for (const TrainingWindow& w : ws.windows) {
      REQUIRE(w.features.rows() == 40);
      CHECK(w.anchor - 20 >= 0);
      CHECK(w.anchor + 19 < 158);
      if (w.word_label > 0) {
        ++keyword;
        continue;
      }
      for (int end : e.word_end_frames) {
        CHECK(std::abs(w.anchor - end) >= kFillerExclusion);
        // no overlap with any keyword window [end-20, end+19]
        CHECK((w.anchor + 19 < end - 20 || w.anchor - 20 > end + 19));
      }
    }
    CHECK(keyword == fitting);
    CHECK(keyword <= 3);
  }
}

TEST_CASE("synth_corpus is a pure function of seed and counts") {
  const SynthCounts counts = SynthCounts::uniform(2, 2);
  const SynthCorpus a = synth_corpus(5, counts);
  const SynthCorpus b = synth_corpus(5, counts);
  REQUIRE(a.clips.size() == 12);
  CHECK(a.manifest == b.manifest);
  for (std::size_t i = 0; i < a.clips.size(); ++i) CHECK(a.clips[i].samples == b.clips[i].samples);
  const SynthCorpus c = synth_corpus(6, counts);
  CHECK(c.clips[0].samples != a.clips[0].samples);
}

TEST_CASE("synth word ends are the construction schedule") {
  const CleanSource src = synth_source(3, Polarity::Positive, 0);
  REQUIRE(src.word_end_frames.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(src.word_end_frames[i] == static_cast<int>(src.word_end_samples[i] / 160));
  const SynthCorpus corpus = synth_corpus(3, SynthCounts::uniform(1, 1));
  CHECK(corpus.manifest[0].polarity == Polarity::Positive);
  CHECK(corpus.manifest[0].word_end_frames == src.word_end_frames);
  // the close-talking clip carries the energy of the schedule: each word is audible before its end
  const auto& x = corpus.clips[0].samples;
  for (std::size_t end : src.word_end_samples) {
    double e = 0.0;
    for (std::size_t n = end - 800; n < end; ++n) e += x[n] * x[n];
    CHECK(e / 800.0 > 1e-3);
  }
}

TEST_CASE("far domains are quieter and zero counts are rejected") {
  const SynthCorpus corpus = synth_corpus(4, SynthCounts::uniform(2, 1));
  auto rms = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s / static_cast<double>(x.size()));
  };
  for (std::size_t i = 0; i < corpus.clips.size(); ++i) {
    if (corpus.clips[i].domain != DomainTag::D3M) continue;
    for (std::size_t j = 0; j < corpus.clips.size(); ++j) {
      const bool same_source = corpus.clips[j].domain == DomainTag::D025 &&
                               corpus.clips[j].polarity == corpus.clips[i].polarity &&
                               corpus.clips[j].clip_id.substr(corpus.clips[j].clip_id.size() - 5) ==
                                   corpus.clips[i].clip_id.substr(corpus.clips[i].clip_id.size() - 5);
      if (same_source) CHECK(rms(corpus.clips[i].samples) < rms(corpus.clips[j].samples));
    }
  }
  SynthCounts zero = SynthCounts::uniform(1, 1);
  zero.negatives[1] = 0;
  CHECK_THROWS_AS(synth_corpus(1, zero), ValidationError);
}

TEST_CASE("domain and polarity spellings") {
  CHECK(parse_domain("0.25m") == DomainTag::D025);
  CHECK(to_string(DomainTag::D3M) == "3m");
  CHECK(parse_polarity("negative") == Polarity::Negative);
  CHECK_THROWS_AS(parse_domain("025"), ParseError);
}
