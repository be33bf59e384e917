// cdrpipe: command line front end for the FOM -> ROM -> kernel surrogate pipeline.
//
// Every stage reads the configuration given by --config (defaults otherwise),
// applies --seed and --out, and writes its artifacts under the output
// directory with the configuration hash in the file name. Stages that need a
// trained model load it from there and fail with their stage's exit code when
// it is missing.

#include "cdrpipe/io.hpp"
#include "cdrpipe/parallel.hpp"
#include "cdrpipe/pipeline.hpp"
#include "cdrpipe/sampling.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace cdr;

constexpr int kUsageError = 1;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  double da = 0.0;
  double pe = 0.0;
  bool verbose = false;
};

template <class F>
auto stage(Stage s, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(s, e.what());
  }
}

PipelineConfig load(const Options& opt) {
  return stage(Stage::kConfig, [&] {
    PipelineConfig c = opt.config_path.empty() ? PipelineConfig{} : load_config(opt.config_path);
    if (opt.seed) c.seed = *opt.seed;
    if (opt.out) c.out_dir = *opt.out;
    if (opt.threads) c.threads = *opt.threads;
    validate(c);
    std::filesystem::create_directories(c.out_dir);
    std::ofstream(artifact_path(c, "config", ".cfg")) << to_text(c);
    return c;
  });
}

std::filesystem::path require(Stage s, const std::filesystem::path& path, const std::string& producer) {
  if (!std::filesystem::exists(path)) {
    throw StageError(s, "missing artifact '" + path.string() + "' (run '" + producer + "' first)");
  }
  return path;
}

std::string mu_tag(const Parameter& mu) {
  std::ostringstream s;
  s << "da" << mu.da << "_pe" << mu.pe;
  return s.str();
}

void print_series(const std::filesystem::path& path, const Eigen::VectorXd& qoi) {
  std::printf("wrote %s\nf(T) = %.10g\n", path.string().c_str(), qoi(qoi.size() - 1));
}

void cmd_assemble(const Options& opt) {
  const PipelineConfig c = load(opt);
  stage(Stage::kAssemble, [&] {
    const AffineOperatorSet ops = assemble(Grid1D(c.num_intervals));
    const auto path = artifact_path(c, "operators", ".blob");
    io::to_blob(ops).write(path);
    std::printf("N_h = %lld\nwrote %s\n", static_cast<long long>(ops.num_dofs()), path.string().c_str());
  });
}

void cmd_fom_solve(const Options& opt) {
  const PipelineConfig c = load(opt);
  const AffineOperatorSet ops = stage(Stage::kAssemble, [&] { return assemble(Grid1D(c.num_intervals)); });
  stage(Stage::kFomSolve, [&] {
    const Parameter mu{opt.da, opt.pe};
    const Trajectory traj = solve_fom(ops, mu, c.num_steps, c.t_end);
    io::write_snapshots(artifact_path(c, "fom_states_" + mu_tag(mu), ".cdr"), traj.states);
    const auto path = artifact_path(c, "fom_qoi_" + mu_tag(mu), ".csv");
    io::write_qoi_csv(path, traj.times, traj.qoi);
    print_series(path, traj.qoi);
  });
}

void cmd_pod_build(const Options& opt) {
  const PipelineConfig c = load(opt);
  const AffineOperatorSet ops = stage(Stage::kAssemble, [&] { return assemble(Grid1D(c.num_intervals)); });
  const Eigen::VectorXd times = time_points(c.num_steps, c.t_end);
  const auto corners = corner_parameters(c.domain);
  const ReducedBasis basis = stage(Stage::kPodBuild, [&] {
    IncrementalHapod hapod(ops.free_block(ops.h1_product).to_sparse(), c.pod_tol, c.pod_omega,
                           (c.num_steps + 1) * static_cast<Eigen::Index>(corners.size()), c.pod_error_mode);
    const StateSink sink = [&](const Eigen::Ref<const Eigen::MatrixXd>& block) { hapod.push(block); };
    for (std::size_t i = 0; i < corners.size(); ++i) {
      const Eigen::VectorXd qoi = stage(Stage::kFomSolve, [&] {
        return solve_fom_qoi(ops, corners[i], c.num_steps, c.t_end, sink, c.pod_chunk_size);
      });
      io::write_qoi_csv(artifact_path(c, "fom_corner" + std::to_string(i), ".csv"), times, qoi);
    }
    return hapod.finalize();
  });
  stage(Stage::kPodBuild, [&] {
    if (basis.size() > 0) io::write_basis(artifact_path(c, "basis", ".cdr"), basis);
    io::to_blob(basis).write(artifact_path(c, "basis", ".blob"));
    const auto path = artifact_path(c, "rom", ".blob");
    io::to_blob(project(ops, basis, config_hash(c))).write(path);
    std::printf("N_rb = %lld\nwrote %s\n", static_cast<long long>(basis.size()), path.string().c_str());
  });
}

ReducedOperatorSet load_rom(const PipelineConfig& c, Stage s) {
  return stage(s, [&] {
    return io::reduced_from_blob(io::Blob::read(require(s, artifact_path(c, "rom", ".blob"), "pod-build")));
  });
}

void cmd_rom_solve(const Options& opt) {
  const PipelineConfig c = load(opt);
  const ReducedOperatorSet rom = load_rom(c, Stage::kRomSolve);
  stage(Stage::kRomSolve, [&] {
    const Parameter mu{opt.da, opt.pe};
    const Eigen::VectorXd qoi = solve_rom(rom, mu, c.num_steps, c.t_end);
    const auto path = artifact_path(c, "rom_qoi_" + mu_tag(mu), ".csv");
    io::write_qoi_csv(path, time_points(c.num_steps, c.t_end), qoi);
    print_series(path, qoi);
  });
}

void cmd_vkoga_fit(const Options& opt) {
  const PipelineConfig c = load(opt);
  const ReducedOperatorSet rom = load_rom(c, Stage::kVkogaFit);
  std::vector<Parameter> inputs = corner_parameters(c.domain);
  const auto training = sample_parameters(c.domain, c.n_rom_train,
                                          substream_seed(c.seed, SampleStream::kRomTraining));
  Eigen::MatrixXd targets(static_cast<Eigen::Index>(inputs.size() + training.size()), c.num_steps + 1);
  stage(Stage::kVkogaFit, [&] {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const auto path = require(Stage::kVkogaFit, artifact_path(c, "fom_corner" + std::to_string(i), ".csv"),
                                "pod-build");
      const Eigen::MatrixX2d series = io::read_qoi_csv(path);
      if (series.rows() != targets.cols()) throw DimensionError("corner output has the wrong length");
      targets.row(static_cast<Eigen::Index>(i)) = series.col(1).transpose();
    }
  });
  const std::size_t offset = inputs.size();
  stage(Stage::kRomSolve, [&] {
    parallel_for(training.size(), [&](std::size_t i) {
      targets.row(static_cast<Eigen::Index>(offset + i)) = solve_rom(rom, training[i], c.num_steps, c.t_end).transpose();
    }, c.threads);
  });
  inputs.insert(inputs.end(), training.begin(), training.end());
  stage(Stage::kVkogaFit, [&] {
    const KernelModel model = fit_fgreedy(inputs, targets, c.kernel_config());
    const auto path = artifact_path(c, "vkoga", ".blob");
    io::to_blob(model).write(path);
    std::printf("centers = %lld (%s)\nwrote %s\n", static_cast<long long>(model.num_centers()),
                to_string(model.stop_reason).c_str(), path.string().c_str());
  });
}

void cmd_predict(const Options& opt) {
  const PipelineConfig c = load(opt);
  stage(Stage::kPredict, [&] {
    const KernelModel model =
        io::kernel_from_blob(io::Blob::read(require(Stage::kPredict, artifact_path(c, "vkoga", ".blob"), "vkoga-fit")));
    const Parameter mu{opt.da, opt.pe};
    require_admissible(mu);
    const Eigen::VectorXd qoi = predict(model, mu);
    const Eigen::VectorXd times = time_points(c.num_steps, c.t_end);
    if (qoi.size() != times.size()) throw DimensionError("model output length does not match the time grid");
    const auto path = artifact_path(c, "ml_qoi_" + mu_tag(mu), ".csv");
    io::write_qoi_csv(path, times, qoi);
    print_series(path, qoi);
  });
}

void cmd_run(const Options& opt) {
  const PipelineConfig c = load(opt);
  const PipelineReport report = run_pipeline(c, {true, opt.verbose});
  std::cout << render_report(report, ReportFormat::kText);
}

void cmd_report(const Options& opt) {
  const PipelineConfig c = load(opt);
  stage(Stage::kReport, [&] {
    std::ifstream in(require(Stage::kReport, artifact_path(c, "report", ".csv"), "run"));
    std::stringstream text;
    text << in.rdbuf();
    std::cout << render_report(parse_report_csv(text.str()), ReportFormat::kText);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parametric convection-diffusion-reaction model reduction pipeline"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config_path, "configuration file (key = value)");
  app.add_option("--seed", opt.seed, "master sampling seed");
  app.add_option("--out", opt.out, "artifact directory");
  app.add_option("--threads", opt.threads, "worker threads (0: all cores)");
  app.add_flag("-v,--verbose", opt.verbose, "progress on stderr");

  const auto with_mu = [&](CLI::App* sub) {
    sub->add_option("--da", opt.da, "Damkoehler number")->required();
    sub->add_option("--pe", opt.pe, "Peclet number")->required();
    return sub;
  };
  app.fallthrough();
  app.add_subcommand("assemble", "assemble the affine FEM operators")->callback([&] { cmd_assemble(opt); });
  with_mu(app.add_subcommand("fom-solve", "full order trajectory at one parameter"))
      ->callback([&] { cmd_fom_solve(opt); });
  app.add_subcommand("pod-build", "corner trajectories, HAPOD basis and reduced operators")
      ->callback([&] { cmd_pod_build(opt); });
  with_mu(app.add_subcommand("rom-solve", "reduced order output at one parameter"))
      ->callback([&] { cmd_rom_solve(opt); });
  app.add_subcommand("vkoga-fit", "fit the kernel surrogate on FOM and ROM outputs")
      ->callback([&] { cmd_vkoga_fit(opt); });
  with_mu(app.add_subcommand("predict", "surrogate output at one parameter"))->callback([&] { cmd_predict(opt); });
  app.add_subcommand("run", "full pipeline with report")->callback([&] { cmd_run(opt); });
  app.add_subcommand("report", "print the report of a previous run")->callback([&] { cmd_report(opt); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  } catch (const StageError& e) {
    std::fprintf(stderr, "cdrpipe: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "cdrpipe: %s\n", e.what());
    return kUsageError;
  }
  return 0;
}
