// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   cdrpipe_acceptance [--out DIR]

#include "cdrpipe/io.hpp"
#include "cdrpipe/pipeline.hpp"
#include "cdrpipe/sampling.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>

namespace {

using namespace cdr;

int failures = 0;

void verdict(int id, bool pass, const std::string& what, const std::string& measured) {
  std::printf("%s criterion %d: %s [%s]\n", pass ? "PASS" : "FAIL", id, what.c_str(), measured.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void guarded(int id, const std::string& what, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    verdict(id, false, what, std::string("exception: ") + e.what());
  }
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Report with the wall-clock columns and the timing-derived payoff blanked.
std::string without_timings(PipelineReport r) {
  for (ModelRow* row : {&r.fom, &r.rom, &r.ml}) row->offline_s = row->online_s = 0.0;
  r.payoff_queries.reset();
  return render_report(r, ReportFormat::kCsv);
}

}  // namespace

int main(int argc, char** argv) {
  std::filesystem::path out = "acceptance_out";
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::strcmp(argv[i], "--out") == 0) out = argv[i + 1];
  }
  std::filesystem::create_directories(out);
  const PipelineConfig defaults;

  guarded(1, "FOM matches the stationary outflow value at T", [&] {
    const AffineOperatorSet ops = assemble(Grid1D(defaults.num_intervals));
    const AffineOperatorSet fine = assemble(Grid1D(8 * defaults.num_intervals));
    double worst = 0.0, worst_ref = 0.0, worst_transient = 0.0;
    for (const Parameter& mu : sample_parameters(defaults.domain, 5, 2024)) {
      const double f = solve_fom_qoi(ops, mu, defaults.num_steps, defaults.t_end)(defaults.num_steps);
      const double exact = steady_qoi_oracle(mu);
      worst = std::max(worst, std::abs(f - exact) / std::abs(exact));
      // Reference with 8x finer mesh and 4x finer steps separates the
      // discretization error from the part of the transient still alive at T.
      const double ref = solve_fom_qoi(fine, mu, 4 * defaults.num_steps, defaults.t_end)(4 * defaults.num_steps);
      worst_ref = std::max(worst_ref, std::abs(f - ref) / std::abs(ref));
      worst_transient = std::max(worst_transient, std::abs(ref - exact) / std::abs(exact));
    }
    verdict(1, worst <= 2e-4, "FOM matches the stationary outflow value at T",
            "max rel. err " + sci(worst) + " <= 2e-4; vs refined reference " + sci(worst_ref) +
                ", refined reference vs stationary " + sci(worst_transient));
  });

  PipelineConfig first = defaults;
  first.out_dir = (out / "default").string();
  PipelineArtifacts art;
  std::optional<PipelineReport> report;
  try {
    report = run_pipeline(first, {true, false}, &art);
    std::printf("default run:\n%s", render_report(*report, ReportFormat::kText).c_str());
  } catch (const std::exception& e) {
    std::printf("default run failed: %s\n", e.what());
  }

  if (report) {
    const double e_rom = *report->rom.rel_err;
    const Eigen::Index n_rb = report->rom.dimension;
    verdict(2, e_rom <= 1e-4 && n_rb >= 8 && n_rb <= 30, "ROM error and basis size",
            "rel. err " + sci(e_rom) + " <= 1e-4, N_rb " + std::to_string(n_rb) + " in [8, 30]");
    const double e_ml = report->ml.rel_err.value_or(INFINITY);
    const Eigen::Index centers = report->ml.dimension;
    verdict(3, e_ml <= 1e-4 && centers <= 100, "surrogate error and size",
            "rel. err " + sci(e_ml) + " <= 1e-4, " + std::to_string(centers) + " centers <= 100");
    const double t_fom = report->fom.online_s, t_rom = report->rom.online_s, t_ml = report->ml.online_s;
    verdict(4, t_ml < t_rom / 10 && t_rom < t_fom, "online cost ordering",
            "t_ml " + sci(t_ml) + " < t_rom/10 " + sci(t_rom / 10) + ", t_rom " + sci(t_rom) + " < t_fom " +
                sci(t_fom));
  } else {
    verdict(2, false, "ROM error and basis size", "default run failed");
    verdict(3, false, "surrogate error and size", "default run failed");
    verdict(4, false, "online cost ordering", "default run failed");
  }

  guarded(5, "full free-DoF basis reproduces the FOM", [&] {
    const AffineOperatorSet ops = assemble(Grid1D(8));
    ReducedBasis full;
    full.basis = gram_schmidt(Eigen::MatrixXd::Identity(ops.num_free(), ops.num_free()),
                              ops.free_block(ops.h1_product).to_sparse());
    const ReducedOperatorSet red = project(ops, full);
    double worst = 0.0;
    for (const Parameter& mu : sample_parameters(defaults.domain, 10, 5)) {
      const Eigen::VectorXd fom = solve_fom_qoi(ops, mu, defaults.num_steps, defaults.t_end);
      const Eigen::VectorXd rom = solve_rom(red, mu, defaults.num_steps, defaults.t_end);
      worst = std::max(worst, (rom - fom).cwiseAbs().maxCoeff());
    }
    verdict(5, worst <= 1e-12, "full free-DoF basis reproduces the FOM", "max abs. diff " + sci(worst) + " <= 1e-12");
  });

  guarded(6, "kernel interpolation at the centers", [&] {
    const auto x = sample_parameters(defaults.domain, 20, 6);
    Eigen::MatrixXd y(20, 3);
    for (Eigen::Index i = 0; i < 20; ++i) {
      const Parameter& mu = x[static_cast<std::size_t>(i)];
      y.row(i) << std::sin(3 * mu.da) + mu.pe, std::exp(-mu.da * mu.pe), mu.da * mu.da - 0.5 * mu.pe;
    }
    KernelConfig cfg = defaults.kernel_config();
    cfg.shape_gamma = 4.0;
    cfg.lambda_reg = 0.0;
    cfg.greedy_tol_rel = 0.0;
    const KernelModel model = fit_fgreedy(x, y, cfg);
    double worst_fit = 0.0, worst_power = 0.0;
    for (Eigen::Index i = 0; i < 20; ++i) {
      const Parameter& mu = x[static_cast<std::size_t>(i)];
      const Eigen::VectorXd s = predict(model, mu);
      worst_fit = std::max(worst_fit, (s - y.row(i).transpose()).norm() / y.row(i).norm());
    }
    for (Eigen::Index j : model.selected) {
      worst_power = std::max(worst_power, power_function(model, x[static_cast<std::size_t>(j)]));
    }
    verdict(6, worst_fit <= 1e-8 && worst_power <= 1e-7, "kernel interpolation at the centers",
            "max rel. misfit " + sci(worst_fit) + " <= 1e-8, max power at centers " + sci(worst_power) +
                " <= 1e-7, " + std::to_string(model.num_centers()) + " centers");
  });

  guarded(7, "HAPOD projection error within tolerance", [&] {
    const AffineOperatorSet ops = assemble(Grid1D(64));
    const SparseMatrix product = ops.free_block(ops.h1_product).to_sparse();
    const int steps = 1024;
    std::vector<Eigen::MatrixXd> snapshots;
    for (const Parameter& mu : corner_parameters(defaults.domain)) {
      snapshots.push_back(solve_fom(ops, mu, steps, defaults.t_end).states.bottomRows(ops.num_free()));
    }
    Eigen::MatrixXd all(ops.num_free(), static_cast<Eigen::Index>(snapshots.size()) * (steps + 1));
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
      all.middleCols(static_cast<Eigen::Index>(i) * (steps + 1), steps + 1) = snapshots[i];
    }
    bool pass = true;
    std::ostringstream measured;
    for (double tol : {1e-2, 1e-3, 1e-4}) {
      IncrementalHapod hapod(product, tol, defaults.pod_omega, all.cols(), defaults.pod_error_mode);
      for (Eigen::Index c = 0; c < all.cols(); c += defaults.pod_chunk_size) {
        hapod.push(all.middleCols(c, std::min(defaults.pod_chunk_size, all.cols() - c)));
      }
      const ReducedBasis basis = hapod.finalize();
      const double err = projection_error(all, basis, product);
      pass = pass && err <= tol;
      measured << "tol " << sci(tol) << ": " << sci(err) << " (" << basis.size() << " modes)  ";
    }
    verdict(7, pass, "HAPOD projection error within tolerance", measured.str());
  });

  guarded(8, "repeated runs give identical reports", [&] {
    if (!report) throw std::runtime_error("default run failed");
    PipelineConfig again = first;
    again.out_dir = (out / "default_again").string();
    const PipelineReport second = run_pipeline(again, {true, false});
    const bool same = without_timings(*report) == without_timings(second) && report->notes == second.notes;
    verdict(8, same, "repeated runs give identical reports",
            same ? "reports equal apart from timing columns" : "reports differ");
  });

  guarded(9, "pay-off shrinks on the finer grid", [&] {
    if (!report) throw std::runtime_error("default run failed");
    PipelineConfig fine = defaults;
    fine.num_intervals = 1024;
    fine.pod_chunk_size = 64;
    fine.out_dir = (out / "fine").string();
    const PipelineReport r = run_pipeline(fine, {true, false});
    std::printf("fine run:\n%s", render_report(r, ReportFormat::kText).c_str());
    const auto coarse_q = report->payoff_queries;
    const auto fine_q = r.payoff_queries;
    const auto show = [](const std::optional<long long>& q) { return q ? std::to_string(*q) : std::string("never"); };
    verdict(9, coarse_q && fine_q && *fine_q < *coarse_q, "pay-off shrinks on the finer grid",
            "pay-off " + show(coarse_q) + " at 2^6 intervals, " + show(fine_q) + " at 2^10 intervals");
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
