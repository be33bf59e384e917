#pragma once

#include "cdrpipe/fom.hpp"

#include <cstdint>
#include <vector>

namespace cdr {

/// Uniform i.i.d. samples in the box.
///
/// Draws come from std::mt19937_64 (whose output sequence is fixed by the C++
/// standard) mapped to [0, 1) via the top 53 bits, so a seed yields the same
/// points on every conforming platform. Degenerate axes return the fixed value.
std::vector<Parameter> sample_parameters(const ParameterDomain& domain, std::size_t n,
                                         std::uint64_t seed);

/// The four box corners, ordered lexicographically by (da, pe).
std::vector<Parameter> corner_parameters(const ParameterDomain& domain);

/// Independent sampling streams derived from one master seed.
enum class SampleStream : std::uint64_t {
  kRomTraining = 1,
  kRomTesting = 2,
  kMlTesting = 3,
  kTiming = 4,
};

std::uint64_t substream_seed(std::uint64_t master, SampleStream stream);

}  // namespace cdr
