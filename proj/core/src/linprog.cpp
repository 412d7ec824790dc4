#include "spinlab/linprog.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace spinlab {

namespace {

// Tableau simplex on [A | I] with artificial basis. Bland's smallest index
// rule everywhere, so no cycling.
class Tableau {
 public:
  Tableau(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol)
      : m_(A.rows()), n_(A.cols()), tol_(tol) {
    T_.resize(m_, n_ + m_ + 1);
    T_.leftCols(n_) = A;
    T_.middleCols(n_, m_) = Eigen::MatrixXd::Identity(m_, m_);
    T_.col(n_ + m_) = b;
    for (Eigen::Index r = 0; r < m_; ++r) {
      if (T_(r, n_ + m_) < 0.0) T_.row(r) = -T_.row(r);
      basis_.push_back(n_ + r);
    }
  }

  // Minimizes the reduced objective for the active columns. Returns false
  // on pivot exhaustion.
  bool run(const Eigen::VectorXd& cost, Eigen::Index active_cols,
           long& pivot_budget) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(T_.cols());
    z.head(cost.size()) = cost;
    // Reduced costs: z_j - c_B B^-1 a_j, maintained incrementally.
    Eigen::RowVectorXd red = z.transpose();
    for (Eigen::Index r = 0; r < m_; ++r) {
      red -= z[basis_[static_cast<std::size_t>(r)]] * T_.row(r);
    }
    while (pivot_budget-- > 0) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < active_cols; ++j) {
        if (red[j] < -tol_) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;

      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index r = 0; r < m_; ++r) {
        const double a = T_(r, enter);
        if (a > tol_) {
          const double ratio = T_(r, n_ + m_) / a;
          if (leave < 0 || ratio < best - tol_ ||
              (ratio < best + tol_ &&
               basis_[static_cast<std::size_t>(r)] <
                   basis_[static_cast<std::size_t>(leave)])) {
            leave = r;
            best = ratio;
          }
        }
      }
      if (leave < 0) {
        unbounded_ = true;
        return true;
      }
      pivot(leave, enter);
      red -= red[enter] * T_.row(leave);
    }
    return false;
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    T_.row(row) /= T_(row, col);
    for (Eigen::Index r = 0; r < m_; ++r) {
      if (r != row && T_(r, col) != 0.0) {
        T_.row(r) -= T_(r, col) * T_.row(row);
      }
    }
    basis_[static_cast<std::size_t>(row)] = col;
  }

  // Drives artificial columns out of the basis where possible after
  // phase one.
  void expel_artificials(long& pivot_budget) {
    for (Eigen::Index r = 0; r < m_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] < n_) continue;
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (std::abs(T_(r, j)) > tol_) {
          enter = j;
          break;
        }
      }
      if (enter >= 0 && pivot_budget-- > 0) pivot(r, enter);
    }
  }

  Eigen::VectorXd solution() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index r = 0; r < m_; ++r) {
      const Eigen::Index j = basis_[static_cast<std::size_t>(r)];
      if (j < n_) x[j] = T_(r, n_ + m_);
    }
    return x;
  }

  double basis_value(const Eigen::VectorXd& cost) const {
    double v = 0.0;
    for (Eigen::Index r = 0; r < m_; ++r) {
      const Eigen::Index j = basis_[static_cast<std::size_t>(r)];
      const double cj = j < cost.size() ? cost[j] : 0.0;
      v += cj * T_(r, n_ + m_);
    }
    return v;
  }

  bool unbounded() const { return unbounded_; }
  Eigen::Index vars() const { return n_; }

 private:
  Eigen::Index m_, n_;
  double tol_;
  Eigen::MatrixXd T_;
  std::vector<Eigen::Index> basis_;
  bool unbounded_ = false;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, double tol, long max_pivots) {
  if (lp.A.rows() != lp.b.size() || lp.A.cols() != lp.c.size()) {
    throw std::invalid_argument("solve_lp: inconsistent dimensions");
  }
  Tableau tab(lp.A, lp.b, tol);
  long budget = max_pivots;

  // Phase one: minimize the sum of artificials.
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(lp.A.cols() + lp.A.rows());
  phase1.tail(lp.A.rows()).setOnes();
  if (!tab.run(phase1, lp.A.cols() + lp.A.rows(), budget)) {
    return {LpStatus::iteration_limit, Eigen::VectorXd(), 0.0};
  }
  const double infeasibility = tab.basis_value(phase1);
  if (infeasibility > 1e3 * tol) {
    return {LpStatus::infeasible, Eigen::VectorXd(), infeasibility};
  }
  tab.expel_artificials(budget);

  // Phase two over the structural columns only.
  if (!tab.run(lp.c, lp.A.cols(), budget)) {
    return {LpStatus::iteration_limit, Eigen::VectorXd(), 0.0};
  }
  if (tab.unbounded()) {
    return {LpStatus::unbounded, Eigen::VectorXd(), 0.0};
  }
  LpResult out;
  out.status = LpStatus::optimal;
  out.x = tab.solution();
  out.objective = lp.c.dot(out.x);
  return out;
}

}  // namespace spinlab
