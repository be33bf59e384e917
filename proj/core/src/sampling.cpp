#include "cdrpipe/sampling.hpp"

#include <random>

namespace cdr {

namespace {

double unit_draw(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double lerp(double lo, double hi, double t) { return lo == hi ? lo : lo + (hi - lo) * t; }

}  // namespace

std::vector<Parameter> sample_parameters(const ParameterDomain& domain, std::size_t n,
                                         std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<Parameter> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = unit_draw(gen);
    const double b = unit_draw(gen);
    out.push_back({lerp(domain.lower.da, domain.upper.da, a), lerp(domain.lower.pe, domain.upper.pe, b)});
  }
  return out;
}

std::vector<Parameter> corner_parameters(const ParameterDomain& domain) {
  const auto& lo = domain.lower;
  const auto& hi = domain.upper;
  return {{lo.da, lo.pe}, {lo.da, hi.pe}, {hi.da, lo.pe}, {hi.da, hi.pe}};
}

std::uint64_t substream_seed(std::uint64_t master, SampleStream stream) {
  // Golden-ratio stride keeps the derived seeds far apart.
  return master + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(stream);
}

}  // namespace cdr
