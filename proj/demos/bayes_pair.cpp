// Optimal regressor and rejector on a six-point task, compared with the
// always-accept and always-defer policies.

#include <cstdio>

#include "rwr/losses.hpp"
#include "rwr/rejection.hpp"
#include "rwr/task.hpp"

int main() {
  const auto task = rwr::tasks::grid6();
  const auto accept_all = rwr::RejectorModel::constant(1);
  const auto defer_all = rwr::RejectorModel::constant(0);

  for (double c : {0.5, 2.0, 5.0}) {
    const auto pair = rwr::oracle_bayes_pair(task, c);
    std::printf("c = %.1f\n     x   mean    var  accept\n", c);
    for (const auto& n : task.nodes())
      std::printf("  %4.1f %6.3f %6.2f  %d\n", n.x[0], pair.regressor.predict(n.x), n.var, pair.rejector.accept(n.x));
    std::printf("  risk: optimal %.4f, accept all %.4f, defer all %.4f\n\n",
                rwr::oracle_rwr_risk(pair.regressor, pair.rejector, task, c),
                rwr::oracle_rwr_risk(pair.regressor, accept_all, task, c),
                rwr::oracle_rwr_risk(pair.regressor, defer_all, task, c));
  }
}
