#include "cdrpipe/pipeline.hpp"

#include "cdrpipe/io.hpp"
#include "cdrpipe/parallel.hpp"
#include "cdrpipe/sampling.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace cdr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class F>
auto in_stage(Stage stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::string fmt_short(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(2) << v;
  return s.str();
}

double max_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

void log(const RunOptions& options, const std::string& msg) {
  if (options.verbose) std::cerr << "[cdrpipe] " << msg << '\n';
}

}  // namespace

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::kConfig: return "config";
    case Stage::kAssemble: return "assemble";
    case Stage::kFomSolve: return "fom-solve";
    case Stage::kPodBuild: return "pod-build";
    case Stage::kRomSolve: return "rom-solve";
    case Stage::kVkogaFit: return "vkoga-fit";
    case Stage::kPredict: return "predict";
    case Stage::kReport: return "report";
  }
  return "unknown";
}

std::optional<long long> payoff_queries(double offline_fom, double online_fom, double offline_ml,
                                        double online_ml) {
  const double extra_offline = offline_ml - offline_fom;
  if (extra_offline <= 0.0) return 0;
  const double saving = online_fom - online_ml;
  if (!(saving > 0.0)) return std::nullopt;
  const double q = std::ceil(extra_offline / saving);
  if (!std::isfinite(q) || q > 9.0e18) return std::nullopt;
  return static_cast<long long>(q);
}

std::filesystem::path artifact_path(const PipelineConfig& config, const std::string& name,
                                    const std::string& ext) {
  return std::filesystem::path(config.out_dir) / (name + "_" + config_hash(config) + ext);
}

PipelineReport run_pipeline(const PipelineConfig& config, const RunOptions& options,
                            PipelineArtifacts* artifacts_out) {
  in_stage(Stage::kConfig, [&] { validate(config); });
  if (options.persist) {
    in_stage(Stage::kConfig, [&] {
      std::filesystem::create_directories(config.out_dir);
      std::ofstream(artifact_path(config, "config", ".cfg")) << to_text(config);
    });
  }

  PipelineArtifacts local;
  PipelineArtifacts& art = artifacts_out ? *artifacts_out : local;
  PipelineReport report;
  const int steps = config.num_steps;
  const double t_end = config.t_end;
  const Eigen::VectorXd times = time_points(steps, t_end);

  // (1) assembly
  auto start = Clock::now();
  const AffineOperatorSet ops = in_stage(Stage::kAssemble, [&] { return assemble(Grid1D(config.num_intervals)); });
  const double offline_fom = seconds_since(start);
  report.fom = {"fom", ops.num_dofs(), offline_fom, 0.0, std::nullopt};
  log(options, "assembled N_h = " + std::to_string(ops.num_dofs()));

  // (2)+(3) corner trajectories streamed into the incremental HAPOD
  art.corners = corner_parameters(config.domain);
  if (config.domain.degenerate()) {
    report.notes.push_back("degenerate parameter box: corner training parameters coincide");
  }
  start = Clock::now();
  in_stage(Stage::kPodBuild, [&] {
    const SparseMatrix product = ops.free_block(ops.h1_product).to_sparse();
    const Eigen::Index per_traj = steps + 1;
    IncrementalHapod hapod(product, config.pod_tol, config.pod_omega,
                           per_traj * static_cast<Eigen::Index>(art.corners.size()),
                           config.pod_error_mode);
    const StateSink sink = [&](const Eigen::Ref<const Eigen::MatrixXd>& block) { hapod.push(block); };
    art.corner_qoi.clear();
    for (const auto& mu : art.corners) {
      art.corner_qoi.push_back(in_stage(Stage::kFomSolve, [&] {
        return solve_fom_qoi(ops, mu, steps, t_end, sink, config.pod_chunk_size);
      }));
    }
    art.basis = hapod.finalize();
    art.hapod_max_working_columns = hapod.max_working_columns();
  });
  log(options, "HAPOD basis size " + std::to_string(art.basis.size()));

  // (4) Galerkin projection
  art.rom = in_stage(Stage::kPodBuild, [&] { return project(ops, art.basis, config_hash(config)); });
  const double offline_rom = offline_fom + seconds_since(start);
  if (options.persist) {
    in_stage(Stage::kPodBuild, [&] {
      for (std::size_t i = 0; i < art.corners.size(); ++i) {
        io::write_qoi_csv(artifact_path(config, "fom_corner" + std::to_string(i), ".csv"), times,
                          art.corner_qoi[i]);
      }
      if (art.basis.size() > 0) io::write_basis(artifact_path(config, "basis", ".cdr"), art.basis);
      io::to_blob(art.basis).write(artifact_path(config, "basis", ".blob"));
      io::to_blob(art.rom).write(artifact_path(config, "rom", ".blob"));
    });
  }

  // (5) ROM error over the corners plus fresh random inputs, measured against the FOM
  in_stage(Stage::kRomSolve, [&] {
    const auto fresh = sample_parameters(config.domain, config.n_rom_err_test,
                                         substream_seed(config.seed, SampleStream::kRomTesting));
    std::vector<Parameter> test = art.corners;
    test.insert(test.end(), fresh.begin(), fresh.end());
    art.rom_errors.assign(test.size(), 0.0);
    parallel_for(test.size(), [&](std::size_t i) {
      const Eigen::VectorXd reference =
          i < art.corners.size() ? art.corner_qoi[i] : solve_fom_qoi(ops, test[i], steps, t_end);
      art.rom_errors[i] = qoi_error(solve_rom(art.rom, test[i], steps, t_end), reference);
    }, config.threads);
  });
  report.rom = {"rom", art.basis.size(), offline_rom, 0.0, max_of(art.rom_errors)};
  log(options, "ROM rel. error " + fmt_short(*report.rom.rel_err));

  // (6) ROM outputs for the surrogate training set
  start = Clock::now();
  art.rom_training = sample_parameters(config.domain, config.n_rom_train,
                                       substream_seed(config.seed, SampleStream::kRomTraining));
  std::vector<Parameter> inputs = art.corners;
  inputs.insert(inputs.end(), art.rom_training.begin(), art.rom_training.end());
  Eigen::MatrixXd targets(static_cast<Eigen::Index>(inputs.size()), steps + 1);
  for (std::size_t i = 0; i < art.corners.size(); ++i) {
    targets.row(static_cast<Eigen::Index>(i)) = art.corner_qoi[i].transpose();
  }
  in_stage(Stage::kRomSolve, [&] {
    parallel_for(art.rom_training.size(), [&](std::size_t i) {
      targets.row(static_cast<Eigen::Index>(art.corners.size() + i)) =
          solve_rom(art.rom, art.rom_training[i], steps, t_end).transpose();
    }, config.threads);
  });
  if (config.n_rom_train == 0) {
    report.notes.push_back("surrogate trained on the corner FOM outputs only");
  }

  // (7) kernel surrogate
  art.ml = in_stage(Stage::kVkogaFit, [&] { return fit_fgreedy(inputs, targets, config.kernel_config()); });
  const double offline_ml = offline_rom + seconds_since(start);
  if (art.ml.breakdown) {
    report.notes.push_back("kernel greedy stopped at the power-function floor above tolerance");
  }
  if (options.persist) {
    in_stage(Stage::kVkogaFit, [&] { io::to_blob(art.ml).write(artifact_path(config, "vkoga", ".blob")); });
  }
  log(options, "kernel model with " + std::to_string(art.ml.num_centers()) + " centers (" +
                   to_string(art.ml.stop_reason) + ")");

  // (8) surrogate error against the ROM
  in_stage(Stage::kPredict, [&] {
    const auto test = sample_parameters(config.domain, config.n_ml_err_test,
                                        substream_seed(config.seed, SampleStream::kMlTesting));
    art.ml_errors.assign(test.size(), 0.0);
    parallel_for(test.size(), [&](std::size_t i) {
      art.ml_errors[i] = qoi_error(predict(art.ml, test[i]), solve_rom(art.rom, test[i], steps, t_end));
    }, config.threads);
  });
  report.ml = {"ml", art.ml.num_centers(), offline_ml, 0.0,
               art.ml_errors.empty() ? std::nullopt : std::optional<double>(max_of(art.ml_errors))};

  // (9) online timings, single threaded
  const auto timing = sample_parameters(config.domain, std::max(config.n_timing_rom, config.n_timing_ml),
                                        substream_seed(config.seed, SampleStream::kTiming));
  in_stage(Stage::kFomSolve, [&] {
    start = Clock::now();
    for (const auto& mu : art.corners) (void)solve_fom_qoi(ops, mu, steps, t_end);
    report.fom.online_s = seconds_since(start) / static_cast<double>(art.corners.size());
  });
  in_stage(Stage::kRomSolve, [&] {
    double sink = 0.0;
    start = Clock::now();
    for (std::size_t i = 0; i < config.n_timing_rom; ++i) sink += solve_rom(art.rom, timing[i], steps, t_end)(steps);
    report.rom.online_s = seconds_since(start) / static_cast<double>(config.n_timing_rom);
    if (!std::isfinite(sink)) throw NonFiniteError("ROM timing run produced non-finite output");
  });
  in_stage(Stage::kPredict, [&] {
    Eigen::VectorXd out(art.ml.d_out);
    double sink = 0.0;
    start = Clock::now();
    for (std::size_t i = 0; i < config.n_timing_ml; ++i) {
      predict_into(art.ml, timing[i], out);
      sink += out(steps);
    }
    report.ml.online_s = seconds_since(start) / static_cast<double>(config.n_timing_ml);
    if (!std::isfinite(sink)) throw NonFiniteError("surrogate timing run produced non-finite output");
  });

  // (10) report
  report.payoff_queries = payoff_queries(report.fom.offline_s, report.fom.online_s,
                                         report.ml.offline_s, report.ml.online_s);
  if (options.persist) {
    in_stage(Stage::kReport, [&] {
      emit_report(report, ReportFormat::kCsv, artifact_path(config, "report", ".csv"));
      emit_report(report, ReportFormat::kText, artifact_path(config, "report", ".txt"));
    });
  }
  return report;
}

std::string render_report(const PipelineReport& report, ReportFormat format) {
  const std::array<const ModelRow*, 3> rows{&report.fom, &report.rom, &report.ml};
  std::ostringstream out;
  if (format == ReportFormat::kCsv) {
    out << "model,dimension,offline_s,online_s,rel_err,payoff\n";
    for (const ModelRow* r : rows) {
      out << r->model << ',' << r->dimension << ',' << fmt(r->offline_s) << ',' << fmt(r->online_s) << ',';
      if (r->rel_err) out << fmt(*r->rel_err);
      out << ',';
      if (r == &report.ml && report.payoff_queries) out << *report.payoff_queries;
      out << '\n';
    }
    return out.str();
  }
  const auto cell = [](const std::string& s, int w) {
    std::ostringstream c;
    c << std::setw(w) << s;
    return c.str();
  };
  out << cell("model", 6) << cell("dimension", 11) << cell("offline_s", 11) << cell("online_s", 11)
      << cell("rel_err", 11) << cell("payoff", 8) << '\n';
  for (const ModelRow* r : rows) {
    out << cell(r->model, 6) << cell(std::to_string(r->dimension), 11) << cell(fmt_short(r->offline_s), 11)
        << cell(fmt_short(r->online_s), 11) << cell(r->rel_err ? fmt_short(*r->rel_err) : "-", 11)
        << cell(r == &report.ml ? (report.payoff_queries ? std::to_string(*report.payoff_queries) : "never") : "", 8)
        << '\n';
  }
  for (const auto& note : report.notes) out << "note: " << note << '\n';
  return out.str();
}

void emit_report(const PipelineReport& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StageError(Stage::kReport, "cannot write report to '" + path.string() + "'");
  out << render_report(report, format);
  if (!out) throw StageError(Stage::kReport, "write failed for '" + path.string() + "'");
}

PipelineReport parse_report_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "model,dimension,offline_s,online_s,rel_err,payoff") {
    throw FormatError("report csv: unexpected header");
  }
  const auto number = [](const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw FormatError("report csv: bad number '" + s + "'");
    return v;
  };
  PipelineReport report;
  int count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) f.push_back(field);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw FormatError("report csv: row '" + line + "' needs 6 fields");
    ModelRow row{f[0], static_cast<Eigen::Index>(number(f[1])), number(f[2]), number(f[3]),
                 f[4].empty() ? std::nullopt : std::optional<double>(number(f[4]))};
    if (row.model == "fom") {
      report.fom = row;
    } else if (row.model == "rom") {
      report.rom = row;
    } else if (row.model == "ml") {
      report.ml = row;
      if (!f[5].empty()) report.payoff_queries = static_cast<long long>(number(f[5]));
    } else {
      throw FormatError("report csv: unknown model '" + row.model + "'");
    }
    ++count;
  }
  if (count != 3) throw FormatError("report csv: expected rows fom, rom and ml");
  return report;
}

}  // namespace cdr
