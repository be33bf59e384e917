#pragma once

// Pipeline configuration and its text format.
//
// One `key = value` pair per line; keys carry a section prefix. Blank lines
// and text after '#' are ignored. Unknown or repeated keys are errors. Keys:
//
//   grid.num_intervals        time.t_end            time.num_steps
//   domain.da_min  domain.da_max  domain.pe_min  domain.pe_max
//   pod.tol  pod.omega  pod.chunk_size  pod.error_mode (relative | absolute)
//   vkoga.gamma  vkoga.lambda  vkoga.max_points  vkoga.greedy_tol_rel  vkoga.output_tol
//   sampling.seed  sampling.n_rom_train  sampling.n_rom_err_test  sampling.n_ml_err_test
//   timing.n_rom  timing.n_ml
//   run.threads  output.dir

#include "cdrpipe/fom.hpp"
#include "cdrpipe/kernel.hpp"
#include "cdrpipe/pod.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace cdr {

struct PipelineConfig {
  int num_intervals = 64;   // h = 2^-6
  double t_end = 3.0;
  int num_steps = 24576;    // dt = 3 / 24576 = 2^-13
  ParameterDomain domain;   // [1e-3, 1]^2

  double pod_tol = 1e-4;
  double pod_omega = 0.75;
  Eigen::Index pod_chunk_size = 1024;
  PodErrorMode pod_error_mode = PodErrorMode::kAbsoluteMean;

  double vkoga_gamma = 1.0;
  double vkoga_lambda = 0.0;
  int vkoga_max_points = 100;
  double vkoga_greedy_tol_rel = 1e-6;
  double vkoga_output_tol = 1e-6;  // 0: fit every time value separately

  std::uint64_t seed = 1;
  std::size_t n_rom_train = 196;
  std::size_t n_rom_err_test = 5;
  std::size_t n_ml_err_test = 50;
  std::size_t n_timing_rom = 10;
  std::size_t n_timing_ml = 1000;

  unsigned threads = 0;  // 0: hardware concurrency
  std::string out_dir = "out";

  KernelConfig kernel_config() const;
};

/// Throws std::invalid_argument describing the first violated constraint.
void validate(const PipelineConfig& config);

PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical rendering: every key, fixed order, round-trip exact numbers.
std::string to_text(const PipelineConfig& config);

/// 16 hex digits of FNV-1a over the canonical text of all result-affecting keys
/// (run.threads and output.dir are excluded).
std::string config_hash(const PipelineConfig& config);

}  // namespace cdr
