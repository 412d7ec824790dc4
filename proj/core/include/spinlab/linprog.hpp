#pragma once

#include <Eigen/Core>

namespace spinlab {

// Equality form linear program: minimize c.x subject to A x = b, x >= 0.
struct LinearProgram {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  Eigen::VectorXd x;
  double objective = 0.0;
};

// Dense two phase simplex with Bland's rule. Sized for small certificate
// problems (hundreds of variables), not for large scale work.
LpResult solve_lp(const LinearProgram& lp, double tol = 1e-11,
                  long max_pivots = 200000);

}  // namespace spinlab
