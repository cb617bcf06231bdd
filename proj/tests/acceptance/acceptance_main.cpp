// End-to-end acceptance runs: reproduces the headline experiment numbers and
// property guarantees, printing one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

#include "flatres/experiments.hpp"
#include "flatres/verify.hpp"

using namespace flatres;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("%s  criterion %d: %s  [%s]\n", pass ? "PASS" : "FAIL", criterion,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

const MetricRow* find_row(const MetricTable& table, const std::string& scenario,
                          const std::string& model, const std::string& ref,
                          std::optional<std::uint64_t> seed = {}) {
  for (const auto& row : table.rows)
    if (row.scenario == scenario && row.model == model &&
        row.reference == ref && (!seed || (row.seed && *row.seed == *seed)))
      return &row;
  return nullptr;
}

double aggregate_mean(const MetricTable& table, const std::string& scenario,
                      const std::string& model, const std::string& ref) {
  for (const auto& a : table.aggregates())
    if (a.scenario == scenario && a.model == model && a.reference == ref)
      return a.mean;
  return std::nan("");
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

}  // namespace

int main() {
  ExperimentConfig cfg = default_config();
  cfg.out_dir = "acceptance-out";
  const RunPaths paths = make_run_paths(cfg);

  // --- criterion 6: property suites -------------------------------------
  {
    const auto t0 = std::chrono::steady_clock::now();
    const VerifyReport report6 = run_verify({});
    std::printf("%s", report6.text().c_str());
    report(6, "property suites", report6.all_pass(),
           fmt("%.0f suites, %.1f s", static_cast<double>(report6.suites.size()),
               seconds_since(t0)));
  }

  // --- criterion 1: ground-truth diffeomorphism exactness ----------------
  {
    const auto t0 = std::chrono::steady_clock::now();
    const PureFeedbackModel model = experiment_model(cfg);
    const FlatnessDiffeomorphism truth =
        construct(model, exact_drag_residual(cfg.quad));
    const Reference circle = experiment_reference(cfg, "circle");
    const QuadrotorParams quad = cfg.quad;
    auto plant = [quad](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
      return true_plant_extended(quad, x, u);
    };
    const SimTrajectory traj =
        open_loop_rollout(plant, truth, circle, cfg.open_loop_dt, cfg.eval_T);
    const double err = position_error(traj, circle);
    const double elapsed = seconds_since(t0);
    report(1, "ground-truth diffeomorphism open-loop exactness",
           err < 1e-4 && elapsed < 5.0,
           fmt("circle error %.3g m (tol 1e-4), %.2f s (budget 5 s)", err,
               elapsed));
  }

  // --- criterion 2: nominal open-loop rows --------------------------------
  double nominal_circle_ol = std::nan("");
  {
    const auto t0 = std::chrono::steady_clock::now();
    const PureFeedbackModel model = experiment_model(cfg);
    const FlatnessDiffeomorphism nominal = construct(model, zero_residual(4, 2));
    const QuadrotorParams quad = cfg.quad;
    auto plant = [quad](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
      return true_plant_extended(quad, x, u);
    };
    const Reference circle = experiment_reference(cfg, "circle");
    const Reference lem = experiment_reference(cfg, "lemniscate");
    const double err_c = position_error(
        open_loop_rollout(plant, nominal, circle, cfg.open_loop_dt, cfg.eval_T),
        circle);
    const double err_l = position_error(
        open_loop_rollout(plant, nominal, lem, cfg.open_loop_dt, cfg.eval_T),
        lem);
    nominal_circle_ol = err_c;
    const double elapsed = seconds_since(t0);
    const bool ok = std::abs(err_c - 0.312) <= 0.15 * 0.312 &&
                    std::abs(err_l - 0.238) <= 0.15 * 0.238 && elapsed < 10.0;
    report(2, "nominal open-loop errors inside the reference bands", ok,
           fmt("circle %.4g m (0.312 +/- 15%%), lemniscate %.4g m "
               "(0.238 +/- 15%%), %.1f s",
               err_c, err_l, elapsed));
  }

  // --- criterion 3: learned open-loop rows (training included) -----------
  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto models = ensure_models(cfg, paths);
    const MetricTable table = run_eval_open_loop(cfg, models, paths);
    const double learned_circle =
        aggregate_mean(table, "open-loop", "learned", "circle");
    const double learned_lem =
        aggregate_mean(table, "open-loop", "learned", "lemniscate");
    const double elapsed = seconds_since(t0);
    const bool ok = models.size() >= 5 && learned_circle >= 0.01 &&
                    learned_circle <= 0.05 && learned_lem >= 0.02 &&
                    learned_lem <= 0.07 &&
                    nominal_circle_ol >= 5.0 * learned_circle &&
                    elapsed < 600.0;
    report(3, "learned open-loop errors over seeds", ok,
           fmt("circle %.4g m in [0.01,0.05], lemniscate %.4g m in "
               "[0.02,0.07], %.0f s (budget 600 s)",
               learned_circle, learned_lem, elapsed));
  }

  // --- criteria 4-5: closed-loop table -----------------------------------
  {
    const auto t0 = std::chrono::steady_clock::now();
    const auto models = ensure_models(cfg, paths);
    const MetricTable table = run_eval_closed_loop(cfg, models, paths);
    const double elapsed = seconds_since(t0);

    const MetricRow* nominal =
        find_row(table, "closed-loop-flat", "nominal", "circle");
    const double flat_circle =
        aggregate_mean(table, "closed-loop-flat", "learned", "circle");
    const double flat_lem =
        aggregate_mean(table, "closed-loop-flat", "learned", "lemniscate");
    const double nmpc_circle =
        aggregate_mean(table, "closed-loop-nmpc", "learned", "circle");
    const double nmpc_lem =
        aggregate_mean(table, "closed-loop-nmpc", "learned", "lemniscate");

    const bool nominal_ok =
        nominal && std::abs(nominal->position_error - 0.0478) <= 0.2 * 0.0478;
    const bool learned_ok = flat_circle <= 0.012 && flat_lem <= 0.012 &&
                            nominal &&
                            nominal->position_error >= 3.0 * flat_circle;
    const bool nmpc_ok = nmpc_circle <= 0.012 && nmpc_lem <= 0.012;
    report(4, "closed-loop tracking errors inside the reference bands",
           nominal_ok && learned_ok && nmpc_ok && elapsed < 1800.0,
           fmt("flat nominal circle %.4g m (0.0478 +/- 20%%); flat learned "
               "%.4g / %.4g m; ",
               nominal ? nominal->position_error : std::nan(""), flat_circle,
               flat_lem) +
               fmt("nmpc %.4g / %.4g m; %.0f s", nmpc_circle, nmpc_lem,
                   elapsed));

    const MetricRow* flat0 = find_row(table, "closed-loop-flat", "learned",
                                      "circle", models.front().seed);
    const MetricRow* nmpc0 = find_row(table, "closed-loop-nmpc", "learned",
                                      "circle", models.front().seed);
    const double ratio = flat0 && nmpc0 && flat0->timing.median_ns > 0
                             ? nmpc0->timing.median_ns / flat0->timing.median_ns
                             : std::nan("");
    report(5, "NMPC-to-flat controller timing ratio", ratio >= 10.0,
           fmt("median ratio %.1fx (flat %.3g ms, nmpc %.3g ms)", ratio,
               flat0 ? flat0->timing.median_ns * 1e-6 : std::nan(""),
               nmpc0 ? nmpc0->timing.median_ns * 1e-6 : std::nan("")));
  }

  std::printf("%s\n", failures == 0 ? "ACCEPTANCE: all criteria passed"
                                    : "ACCEPTANCE: FAILURES PRESENT");
  return failures == 0 ? 0 : 1;
}
