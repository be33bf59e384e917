#pragma once

// FOM -> ROM -> kernel surrogate pipeline and its accuracy/cost report.

#include "cdrpipe/config.hpp"
#include "cdrpipe/errors.hpp"
#include "cdrpipe/kernel.hpp"
#include "cdrpipe/pod.hpp"
#include "cdrpipe/rom.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cdr {

/// Pipeline stages; the value is the process exit code used when the stage fails.
enum class Stage : int {
  kConfig = 2,
  kAssemble = 3,
  kFomSolve = 4,
  kPodBuild = 5,
  kRomSolve = 6,
  kVkogaFit = 7,
  kPredict = 8,
  kReport = 9,
};

std::string to_string(Stage stage);

class StageError : public Error {
 public:
  StageError(Stage stage, const std::string& what)
      : Error("[" + to_string(stage) + "] " + what), stage_(stage) {}
  Stage stage() const { return stage_; }
  int exit_code() const { return static_cast<int>(stage_); }

 private:
  Stage stage_;
};

struct ModelRow {
  std::string model;  // "fom", "rom", "ml"
  Eigen::Index dimension = 0;  // N_h, N_rb, number of centers
  double offline_s = 0.0;      // cumulative build time
  double online_s = 0.0;       // mean time per query
  std::optional<double> rel_err;
};

struct PipelineReport {
  ModelRow fom;
  ModelRow rom;
  ModelRow ml;
  std::optional<long long> payoff_queries;
  std::vector<std::string> notes;
};

/// Smallest q >= 0 with offline_ml + q online_ml <= offline_fom + q online_fom,
/// or nullopt when the surrogate never catches up.
std::optional<long long> payoff_queries(double offline_fom, double online_fom, double offline_ml,
                                        double online_ml);

/// Everything the pipeline produced besides the report.
struct PipelineArtifacts {
  ReducedBasis basis;
  ReducedOperatorSet rom;
  KernelModel ml;
  std::vector<Parameter> corners;
  std::vector<Eigen::VectorXd> corner_qoi;  // FOM outputs at the corners
  std::vector<Parameter> rom_training;
  Eigen::Index hapod_max_working_columns = 0;
  std::vector<double> rom_errors;            // per input of the ROM test set
  std::vector<double> ml_errors;             // per input of the ML test set
};

struct RunOptions {
  bool persist = false;  // write artifacts under config.out_dir
  bool verbose = false;  // progress lines on stderr
};

/// Runs every stage in order. Failures are rethrown as StageError; artifacts
/// finished before the failure are already on disk when persisting.
PipelineReport run_pipeline(const PipelineConfig& config, const RunOptions& options = {},
                            PipelineArtifacts* artifacts = nullptr);

enum class ReportFormat { kCsv, kText };

/// CSV columns: model,dimension,offline_s,online_s,rel_err,payoff. Empty cells
/// mark absent values; the payoff sits on the ml row.
std::string render_report(const PipelineReport& report, ReportFormat format);
void emit_report(const PipelineReport& report, ReportFormat format,
                 const std::filesystem::path& path);
PipelineReport parse_report_csv(const std::string& csv);

/// Content-addressed artifact path: <dir>/<name>_<hash><ext>.
std::filesystem::path artifact_path(const PipelineConfig& config, const std::string& name,
                                    const std::string& ext);

}  // namespace cdr
