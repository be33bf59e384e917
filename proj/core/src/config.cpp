#include "cdrpipe/config.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cdr {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

template <class Int>
Int to_integer(const std::string& key, const std::string& value) {
  Int v{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw std::invalid_argument("config: '" + key + "' expects an integer, got '" + value + "'");
  }
  return v;
}

std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"grid.num_intervals", [](auto& c, auto& k, auto& v) { c.num_intervals = to_integer<int>(k, v); }},
      {"time.t_end", [](auto& c, auto& k, auto& v) { c.t_end = to_double(k, v); }},
      {"time.num_steps", [](auto& c, auto& k, auto& v) { c.num_steps = to_integer<int>(k, v); }},
      {"domain.da_min", [](auto& c, auto& k, auto& v) { c.domain.lower.da = to_double(k, v); }},
      {"domain.da_max", [](auto& c, auto& k, auto& v) { c.domain.upper.da = to_double(k, v); }},
      {"domain.pe_min", [](auto& c, auto& k, auto& v) { c.domain.lower.pe = to_double(k, v); }},
      {"domain.pe_max", [](auto& c, auto& k, auto& v) { c.domain.upper.pe = to_double(k, v); }},
      {"pod.tol", [](auto& c, auto& k, auto& v) { c.pod_tol = to_double(k, v); }},
      {"pod.omega", [](auto& c, auto& k, auto& v) { c.pod_omega = to_double(k, v); }},
      {"pod.chunk_size", [](auto& c, auto& k, auto& v) { c.pod_chunk_size = to_integer<Eigen::Index>(k, v); }},
      {"pod.error_mode", [](auto& c, auto&, auto& v) { c.pod_error_mode = pod_error_mode_from_string(v); }},
      {"vkoga.gamma", [](auto& c, auto& k, auto& v) { c.vkoga_gamma = to_double(k, v); }},
      {"vkoga.lambda", [](auto& c, auto& k, auto& v) { c.vkoga_lambda = to_double(k, v); }},
      {"vkoga.max_points", [](auto& c, auto& k, auto& v) { c.vkoga_max_points = to_integer<int>(k, v); }},
      {"vkoga.greedy_tol_rel", [](auto& c, auto& k, auto& v) { c.vkoga_greedy_tol_rel = to_double(k, v); }},
      {"vkoga.output_tol", [](auto& c, auto& k, auto& v) { c.vkoga_output_tol = to_double(k, v); }},
      {"sampling.seed", [](auto& c, auto& k, auto& v) { c.seed = to_integer<std::uint64_t>(k, v); }},
      {"sampling.n_rom_train", [](auto& c, auto& k, auto& v) { c.n_rom_train = to_integer<std::size_t>(k, v); }},
      {"sampling.n_rom_err_test", [](auto& c, auto& k, auto& v) { c.n_rom_err_test = to_integer<std::size_t>(k, v); }},
      {"sampling.n_ml_err_test", [](auto& c, auto& k, auto& v) { c.n_ml_err_test = to_integer<std::size_t>(k, v); }},
      {"timing.n_rom", [](auto& c, auto& k, auto& v) { c.n_timing_rom = to_integer<std::size_t>(k, v); }},
      {"timing.n_ml", [](auto& c, auto& k, auto& v) { c.n_timing_ml = to_integer<std::size_t>(k, v); }},
      {"run.threads", [](auto& c, auto& k, auto& v) { c.threads = to_integer<unsigned>(k, v); }},
      {"output.dir", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
  };
  return table;
}

std::string result_text(const PipelineConfig& c) {
  std::ostringstream s;
  s << "grid.num_intervals = " << c.num_intervals << '\n'
    << "time.t_end = " << fmt(c.t_end) << '\n'
    << "time.num_steps = " << c.num_steps << '\n'
    << "domain.da_min = " << fmt(c.domain.lower.da) << '\n'
    << "domain.da_max = " << fmt(c.domain.upper.da) << '\n'
    << "domain.pe_min = " << fmt(c.domain.lower.pe) << '\n'
    << "domain.pe_max = " << fmt(c.domain.upper.pe) << '\n'
    << "pod.tol = " << fmt(c.pod_tol) << '\n'
    << "pod.omega = " << fmt(c.pod_omega) << '\n'
    << "pod.chunk_size = " << c.pod_chunk_size << '\n'
    << "pod.error_mode = " << to_string(c.pod_error_mode) << '\n'
    << "vkoga.gamma = " << fmt(c.vkoga_gamma) << '\n'
    << "vkoga.lambda = " << fmt(c.vkoga_lambda) << '\n'
    << "vkoga.max_points = " << c.vkoga_max_points << '\n'
    << "vkoga.greedy_tol_rel = " << fmt(c.vkoga_greedy_tol_rel) << '\n'
    << "vkoga.output_tol = " << fmt(c.vkoga_output_tol) << '\n'
    << "sampling.seed = " << c.seed << '\n'
    << "sampling.n_rom_train = " << c.n_rom_train << '\n'
    << "sampling.n_rom_err_test = " << c.n_rom_err_test << '\n'
    << "sampling.n_ml_err_test = " << c.n_ml_err_test << '\n'
    << "timing.n_rom = " << c.n_timing_rom << '\n'
    << "timing.n_ml = " << c.n_timing_ml << '\n';
  return s.str();
}

}  // namespace

KernelConfig PipelineConfig::kernel_config() const {
  KernelConfig k;
  k.shape_gamma = vkoga_gamma;
  k.lambda_reg = vkoga_lambda;
  k.max_points = vkoga_max_points;
  k.greedy_tol_rel = vkoga_greedy_tol_rel;
  k.output_tol = vkoga_output_tol;
  k.normalization.box = domain;
  return k;
}

void validate(const PipelineConfig& c) {
  const auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (c.num_intervals < 2) fail("grid.num_intervals must be >= 2");
  if (!(c.t_end > 0.0)) fail("time.t_end must be positive");
  if (c.num_steps < 1) fail("time.num_steps must be >= 1");
  ParameterDomain check(c.domain.lower, c.domain.upper);  // throws on a bad box
  if (!(c.pod_tol > 0.0)) fail("pod.tol must be positive");
  if (!(c.pod_omega > 0.0 && c.pod_omega < 1.0)) fail("pod.omega must lie in (0, 1)");
  if (c.pod_chunk_size < 1) fail("pod.chunk_size must be >= 1");
  if (!(c.vkoga_gamma > 0.0)) fail("vkoga.gamma must be positive");
  if (!(c.vkoga_lambda >= 0.0)) fail("vkoga.lambda must be >= 0");
  if (c.vkoga_max_points < 1) fail("vkoga.max_points must be >= 1");
  if (!(c.vkoga_greedy_tol_rel > 0.0)) fail("vkoga.greedy_tol_rel must be positive");
  if (!(c.vkoga_output_tol >= 0.0 && c.vkoga_output_tol < 1.0)) fail("vkoga.output_tol must lie in [0, 1)");
  if (c.n_timing_rom < 1 || c.n_timing_ml < 1) fail("timing counts must be >= 1");
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig config;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    it->second(config, key, value);
  }
  validate(config);
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_text(const PipelineConfig& c) {
  return result_text(c) + "run.threads = " + std::to_string(c.threads) + "\noutput.dir = " + c.out_dir + "\n";
}

std::string config_hash(const PipelineConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : result_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::array<char, 17> hex{};
  std::snprintf(hex.data(), hex.size(), "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex.data(), 16);
}

}  // namespace cdr
