#include "../binio.hpp"

#include <fkws/dsp.hpp>

#include <fstream>

namespace fkws {

void write_feature_cache(const std::filesystem::path& path, const FeatureMatrix& features) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  binio::put_bytes(os, "FKWSFEAT");
  binio::put_u32(os, kFeatureCacheVersion);
  binio::put_u32(os, static_cast<std::uint32_t>(features.rows()));
  binio::put_u32(os, static_cast<std::uint32_t>(features.cols()));
  for (Eigen::Index t = 0; t < features.rows(); ++t)
    for (Eigen::Index m = 0; m < features.cols(); ++m) binio::put_f32(os, static_cast<float>(features(t, m)));
  if (!os) throw IoError("write failed for " + path.string());
}

FeatureMatrix read_feature_cache(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  binio::expect_magic(is, "FKWSFEAT");
  const auto version = binio::get_u32(is);
  if (version != kFeatureCacheVersion)
    throw FormatError("feature cache version " + std::to_string(version) + " not supported");
  const auto rows = binio::get_u32(is);
  const auto cols = binio::get_u32(is);
  FeatureMatrix f(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint32_t t = 0; t < rows; ++t)
    for (std::uint32_t m = 0; m < cols; ++m) f(t, m) = binio::get_f32(is);
  return f;
}

}  // namespace fkws
