// Fixed-budget rejection: sweep the budget and compare the realized test
// rejection rate with the target.

#include <cstdio>

#include "rwr/harness/experiment.hpp"

int main() {
  rwr::harness::ExperimentConfig cfg;
  cfg.dataset_source = "synthetic:hetero1d";
  cfg.n_samples = 2000;
  cfg.repeats = 5;
  cfg.cost.mode = rwr::CostMode::FixedBudget;
  cfg.rejector = rwr::harness::RejectorChoice::Conformal;

  std::printf("gamma  rejected        machine loss    threshold (repeat 0)\n");
  for (double gamma : {0.05, 0.1, 0.2, 0.3, 0.5}) {
    cfg.cost.budget_gamma = gamma;
    const auto rep = rwr::harness::run_fixed_budget(cfg);
    const auto& thr = rep.selections.front().at("conformal");
    std::printf("%5.2f  %.3f +/- %.3f   %.4f +/- %.4f  %s (m = %zu)\n", gamma, rep.rejection.mean, rep.rejection.std,
                rep.machine.mean, rep.machine.std, thr.at("c_hat").dump().c_str(), thr.at("m").get<std::size_t>());
  }
}
