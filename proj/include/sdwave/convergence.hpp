#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sdwave/domain.hpp"
#include "sdwave/expr.hpp"
#include "sdwave/integrator.hpp"
#include "sdwave/mesh.hpp"
#include "sdwave/nonlinearity.hpp"

namespace sdwave {

struct ConvergenceLevel {
  int cells = 0;
  double dt = 0.0;
  double error = 0.0;  ///< max over steps of ‖u − u*‖₂
  double order = 0.0;  ///< log2(previous error / error); 0 on the first level
};

/// Manufactured-solution study with simultaneous halving of h and dt.
///
/// Level k uses base_cells·2^k cells per axis and base_dt/2^k at fixed step
/// size. Initial data are u*(·,0) and the given u1 expression; `source`
/// must make u* an exact solution.
inline std::vector<ConvergenceLevel> convergence_study(const Domain& base, double base_dt,
                                                       double t_end, int levels,
                                                       const Expr& exact, const Expr& exact_t,
                                                       const Expr& source,
                                                       const Nonlinearity& nl) {
  std::vector<ConvergenceLevel> out;
  for (int k = 0; k < levels; ++k) {
    const int scale = 1 << k;
    const Domain d = base.dimension() == 1
                         ? Domain::interval(base.length(0), base.cells(0) * scale)
                         : Domain::rectangle(base.length(0), base.length(1),
                                             base.cells(0) * scale, base.cells(1) * scale);
    const double dt = base_dt / scale;
    State s(sample(exact, d, 0.0).field, sample(exact_t, d, 0.0).field);
    double err = 0.0;
    while (t_end - s.t > 1e-12 * t_end) {
      s = step(s, std::min(dt, t_end - s.t), nl, &source).state;
      if (!s.u.all_finite()) throw NumericalError("convergence run produced non-finite values");
      err = std::max(err, std::sqrt(norm_l2_sq(s.u - sample(exact, d, s.t).field)));
    }
    ConvergenceLevel lvl{d.cells(0), dt, err, 0.0};
    if (!out.empty() && err > 0.0) lvl.order = std::log2(out.back().error / err);
    out.push_back(lvl);
  }
  return out;
}

}  // namespace sdwave
