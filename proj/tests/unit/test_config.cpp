#include "cdrpipe/config.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <fstream>

using namespace cdr;

TEST_CASE("defaults describe the reference experiment") {
  const PipelineConfig c;
  CHECK(c.num_intervals == 64);
  CHECK(c.t_end == 3.0);
  CHECK(c.num_steps == 24576);
  CHECK(c.t_end / c.num_steps == std::ldexp(1.0, -13));
  CHECK(c.pod_tol == 1e-4);
  CHECK(c.n_rom_train == 196);
  CHECK(c.n_rom_err_test == 5);
  CHECK(c.n_ml_err_test == 50);
  CHECK(c.domain.lower == Parameter{1e-3, 1e-3});
  CHECK(c.domain.upper == Parameter{1, 1});
  CHECK(c.kernel_config().output_tol == 1e-6);
  CHECK(c.pod_error_mode == PodErrorMode::kAbsoluteMean);
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("canonical text parses back to the same configuration") {
  PipelineConfig c;
  c.num_intervals = 17;
  c.pod_tol = 1.0 / 3.0;
  c.vkoga_gamma = 2.5;
  c.pod_error_mode = PodErrorMode::kRelative;
  c.seed = 18446744073709551615ULL;
  c.out_dir = "some dir/x";
  const PipelineConfig back = parse_config(to_text(c));
  CHECK(to_text(back) == to_text(c));
  CHECK(back.pod_tol == c.pod_tol);
  CHECK(back.out_dir == "some dir/x");
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("comments, blanks and whitespace") {
  const PipelineConfig c = parse_config("# header\n\n  grid.num_intervals =  8   # coarse\r\ntime.num_steps=64\n");
  CHECK(c.num_intervals == 8);
  CHECK(c.num_steps == 64);
}

TEST_CASE("malformed input is rejected") {
  CHECK_THROWS_AS(parse_config("grid.num_intervals 8\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("grid.cells = 8\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("pod.tol = 1e-4\npod.tol = 1e-3\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("pod.tol = small\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("time.num_steps = 3.5\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("grid.num_intervals = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("pod.omega = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("domain.da_min = 2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("pod.error_mode = fancy\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config("vkoga.output_tol = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_config("/nonexistent/cdrpipe.cfg"), std::invalid_argument);
}

TEST_CASE("hash ignores threads and output location only") {
  PipelineConfig a;
  PipelineConfig b = a;
  b.threads = 7;
  b.out_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.seed = 2;
  CHECK(config_hash(a) != config_hash(b));
  PipelineConfig c = a;
  c.pod_chunk_size = 64;
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("load from file") {
  const auto dir = test::scratch_dir("config");
  {
    std::ofstream out(dir / "c.cfg");
    out << "sampling.seed = 42\nvkoga.max_points = 10\n";
  }
  const PipelineConfig c = load_config(dir / "c.cfg");
  CHECK(c.seed == 42);
  CHECK(c.vkoga_max_points == 10);
  CHECK(c.kernel_config().max_points == 10);
  CHECK(c.kernel_config().normalization.box.upper == Parameter{1, 1});
}
