#pragma once

#include "segc/synthgen.hpp"

#include <cstdint>
#include <filesystem>

namespace segc {

/// Writes one directory per environment (in_distribution plus the three OOD
/// environments) holding P6 images and P5 masks, and manifest.json at the root.
void write_suite(const std::filesystem::path& dir, const Suite& suite, const SuiteConfig& config,
                 std::uint64_t seed);

struct LoadedSuite {
  Suite suite;
  SuiteConfig config;
  std::uint64_t seed = 0;
};

/// Reads a directory produced by write_suite.
LoadedSuite load_suite(const std::filesystem::path& dir);

}  // namespace segc
