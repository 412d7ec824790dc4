#include "spinlab/transport.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

#include "spinlab/linprog.hpp"
#include "spinlab/numeric.hpp"

namespace spinlab {
namespace {

constexpr double kMassFloor = 1e-15;
constexpr double kLeftoverTol = 1e-13;
constexpr double kEntryFloor = -1e-9;

Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> symbol_table(
    const ConfigSpace& space) {
  const auto states = static_cast<Eigen::Index>(space.num_states());
  const auto n = static_cast<Eigen::Index>(space.num_sites());
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> table(states, n);
  std::vector<int> symbols;
  for (Eigen::Index id = 0; id < states; ++id) {
    space.decode_into(static_cast<std::uint64_t>(id), symbols);
    for (Eigen::Index i = 0; i < n; ++i) table(id, i) = symbols[i];
  }
  return table;
}

Eigen::VectorXd plan_site_disagreement(
    const TransportPlan& plan,
    const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& table) {
  const Eigen::Index n = table.cols();
  std::vector<KahanSum> sums(static_cast<std::size_t>(n));
  for (const auto& e : plan.entries) {
    if (e.from == e.to) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (table(e.from, i) != table(e.to, i))
        sums[static_cast<std::size_t>(i)].add(e.mass);
    }
  }
  Eigen::VectorXd m(n);
  for (Eigen::Index i = 0; i < n; ++i)
    m[i] = sums[static_cast<std::size_t>(i)].value();
  return m;
}

void fill_disagreement_costs(
    const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& table,
    const Eigen::VectorXd& site_costs, Eigen::MatrixXd& out) {
  const Eigen::Index states = table.rows();
  const Eigen::Index n = table.cols();
  out.resize(states, states);
  for (Eigen::Index a = 0; a < states; ++a) {
    out(a, a) = 0.0;
    for (Eigen::Index b = a + 1; b < states; ++b) {
      double c = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (table(a, i) != table(b, i)) c += site_costs[i];
      }
      out(a, b) = c;
      out(b, a) = c;
    }
  }
}

// Exact minimum of ||sum_j w_j p_j||^2 over the probability simplex, by
// Wolfe's method. The affine subproblems are solved through a KKT system;
// rank deficiency is harmless because any minimizer serves.
Eigen::VectorXd min_norm_point(const std::vector<Eigen::VectorXd>& pts) {
  const std::size_t count = pts.size();
  if (count == 1) return Eigen::VectorXd::Ones(1);
  const Eigen::Index dim = pts[0].size();
  Eigen::MatrixXd P(dim, static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < count; ++j)
    P.col(static_cast<Eigen::Index>(j)) = pts[j];

  double scale = 0.0;
  for (std::size_t j = 0; j < count; ++j)
    scale = std::max(scale, pts[j].squaredNorm());
  const double opt_tol = 1e-13 * (1.0 + scale);

  std::vector<Eigen::Index> active;
  Eigen::Index first = 0;
  P.colwise().squaredNorm().minCoeff(&first);
  active.push_back(first);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd x = P.col(first);

  const auto affine_min = [&](const std::vector<Eigen::Index>& set) {
    const auto k = static_cast<Eigen::Index>(set.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b)
        kkt(a, b) = 2.0 * P.col(set[static_cast<std::size_t>(a)])
                              .dot(P.col(set[static_cast<std::size_t>(b)]));
      kkt(a, k) = 1.0;
      kkt(k, a) = 1.0;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    rhs[k] = 1.0;
    Eigen::VectorXd sol =
        kkt.completeOrthogonalDecomposition().solve(rhs);
    return sol.head(k).eval();
  };

  for (int guard = 0; guard < 16 * static_cast<int>(count) + 64; ++guard) {
    Eigen::Index enter = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(count); ++j) {
      const double d = x.dot(P.col(j));
      if (d < best) {
        best = d;
        enter = j;
      }
    }
    if (x.squaredNorm() <= best + opt_tol) break;
    if (std::find(active.begin(), active.end(), enter) != active.end()) break;
    active.push_back(enter);
    Eigen::VectorXd wext(active.size());
    wext.head(w.size()) = w;
    wext[static_cast<Eigen::Index>(active.size()) - 1] = 0.0;
    w = wext;

    while (true) {
      Eigen::VectorXd v = affine_min(active);
      if (v.minCoeff() >= -1e-12) {
        w = v;
        break;
      }
      double theta = 1.0;
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (v[j] < w[j] && v[j] < 0.0)
          theta = std::min(theta, w[j] / (w[j] - v[j]));
      }
      w = w + theta * (v - w);
      std::vector<Eigen::Index> keep_idx;
      std::vector<Eigen::Index> keep_col;
      for (Eigen::Index j = 0; j < w.size(); ++j) {
        if (w[j] > 1e-14) {
          keep_idx.push_back(j);
          keep_col.push_back(active[static_cast<std::size_t>(j)]);
        }
      }
      if (keep_idx.empty()) {
        keep_idx.push_back(0);
        keep_col.push_back(active[0]);
        w[0] = 1.0;
      }
      Eigen::VectorXd wnew(keep_idx.size());
      for (std::size_t j = 0; j < keep_idx.size(); ++j)
        wnew[static_cast<Eigen::Index>(j)] = w[keep_idx[j]];
      w = wnew / wnew.sum();
      active = keep_col;
      if (active.size() == 1) break;
    }
    x.setZero();
    for (std::size_t j = 0; j < active.size(); ++j)
      x += w[static_cast<Eigen::Index>(j)] * P.col(active[j]);
  }

  Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < active.size(); ++j)
    full[active[j]] += w[static_cast<Eigen::Index>(j)];
  return full;
}

}  // namespace

Coupling::Coupling(std::shared_ptr<const ConfigSpace> space, Eigen::MatrixXd w)
    : space_(std::move(space)), w_(std::move(w)) {
  if (space_ == nullptr) throw std::invalid_argument("coupling: null space");
  const auto states = static_cast<Eigen::Index>(space_->num_states());
  if (w_.rows() != states || w_.cols() != states)
    throw std::invalid_argument("coupling: weight shape mismatch");
  for (Eigen::Index a = 0; a < states; ++a) {
    for (Eigen::Index b = 0; b < states; ++b) {
      if (w_(a, b) < kEntryFloor)
        throw std::invalid_argument("coupling: negative weight");
      if (w_(a, b) < 0.0) w_(a, b) = 0.0;
    }
  }
}

Eigen::VectorXd Coupling::left_marginal() const {
  Eigen::VectorXd out(w_.rows());
  for (Eigen::Index a = 0; a < w_.rows(); ++a) {
    KahanSum sum;
    for (Eigen::Index b = 0; b < w_.cols(); ++b) sum.add(w_(a, b));
    out[a] = sum.value();
  }
  return out;
}

Eigen::VectorXd Coupling::right_marginal() const {
  Eigen::VectorXd out(w_.cols());
  for (Eigen::Index b = 0; b < w_.cols(); ++b) {
    KahanSum sum;
    for (Eigen::Index a = 0; a < w_.rows(); ++a) sum.add(w_(a, b));
    out[b] = sum.value();
  }
  return out;
}

double Coupling::disagreement_probability() const {
  KahanSum off;
  for (Eigen::Index a = 0; a < w_.rows(); ++a) {
    for (Eigen::Index b = 0; b < w_.cols(); ++b) {
      if (a != b) off.add(w_(a, b));
    }
  }
  return off.value();
}

Eigen::VectorXd Coupling::site_disagreement() const {
  const auto table = symbol_table(*space_);
  const Eigen::Index n = table.cols();
  std::vector<KahanSum> sums(static_cast<std::size_t>(n));
  for (Eigen::Index a = 0; a < w_.rows(); ++a) {
    for (Eigen::Index b = 0; b < w_.cols(); ++b) {
      if (a == b || w_(a, b) == 0.0) continue;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (table(a, i) != table(b, i))
          sums[static_cast<std::size_t>(i)].add(w_(a, b));
      }
    }
  }
  Eigen::VectorXd m(n);
  for (Eigen::Index i = 0; i < n; ++i)
    m[i] = sums[static_cast<std::size_t>(i)].value();
  return m;
}

double Coupling::max_marginal_residual(const Distribution& r,
                                       const Distribution& s) const {
  if (!space_->same_shape(r.space()) || !space_->same_shape(s.space()))
    throw std::invalid_argument("coupling: marginal space mismatch");
  const Eigen::VectorXd rows = left_marginal();
  const Eigen::VectorXd cols = right_marginal();
  double worst = 0.0;
  for (Eigen::Index a = 0; a < rows.size(); ++a)
    worst = std::max(worst, std::abs(rows[a] - r[static_cast<std::uint64_t>(a)]));
  for (Eigen::Index b = 0; b < cols.size(); ++b)
    worst = std::max(worst, std::abs(cols[b] - s[static_cast<std::uint64_t>(b)]));
  return worst;
}

Coupling maximal_coupling(const Distribution& r, const Distribution& s) {
  if (!r.space().same_shape(s.space()))
    throw std::invalid_argument("maximal_coupling: space mismatch");
  const auto states = static_cast<Eigen::Index>(r.space().num_states());
  Eigen::VectorXd ru(states);
  Eigen::VectorXd su(states);
  KahanSum tv_sum;
  for (Eigen::Index a = 0; a < states; ++a) {
    const auto id = static_cast<std::uint64_t>(a);
    const double lo = std::min(r[id], s[id]);
    ru[a] = r[id] - lo;
    su[a] = s[id] - lo;
    tv_sum.add(ru[a]);
  }
  const double tv_mass = tv_sum.value();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(states, states);
  for (Eigen::Index a = 0; a < states; ++a)
    w(a, a) = std::min(r[static_cast<std::uint64_t>(a)],
                       s[static_cast<std::uint64_t>(a)]);
  if (tv_mass > kMassFloor) {
    for (Eigen::Index a = 0; a < states; ++a) {
      if (ru[a] == 0.0) continue;
      for (Eigen::Index b = 0; b < states; ++b) {
        if (su[b] == 0.0) continue;
        w(a, b) += ru[a] * su[b] / tv_mass;
      }
    }
  }
  return Coupling(r.space_ptr(), std::move(w));
}

TransportPlan min_cost_transport(
    const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
    const std::function<double(std::uint32_t, std::uint32_t)>& cost) {
  const Eigen::Index ns = supply.size();
  const Eigen::Index nd = demand.size();
  if (ns == 0 || nd == 0)
    throw std::invalid_argument("min_cost_transport: empty side");
  if (supply.minCoeff() < 0.0 || demand.minCoeff() < 0.0)
    throw std::invalid_argument("min_cost_transport: negative mass");

  Eigen::VectorXd rem_s = supply;
  Eigen::VectorXd rem_d = demand;
  Eigen::MatrixXd flow = Eigen::MatrixXd::Zero(ns, nd);
  Eigen::VectorXd pot_s = Eigen::VectorXd::Zero(ns);
  Eigen::VectorXd pot_d = Eigen::VectorXd::Zero(nd);

  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd dist_s(ns);
  Eigen::VectorXd dist_d(nd);
  std::vector<char> done_s(static_cast<std::size_t>(ns));
  std::vector<char> done_d(static_cast<std::size_t>(nd));
  std::vector<Eigen::Index> pred_d(static_cast<std::size_t>(nd));
  std::vector<Eigen::Index> pred_s(static_cast<std::size_t>(ns));

  const long phase_cap = 64 * static_cast<long>(ns + nd) + 1024;
  long phases = 0;
  while (true) {
    KahanSum rem_total;
    for (Eigen::Index i = 0; i < ns; ++i) rem_total.add(rem_s[i]);
    if (rem_total.value() <= kLeftoverTol) break;
    if (++phases > phase_cap)
      throw SolverError("min_cost_transport: augmentation budget exhausted");

    dist_s.setConstant(inf);
    dist_d.setConstant(inf);
    std::fill(done_s.begin(), done_s.end(), 0);
    std::fill(done_d.begin(), done_d.end(), 0);
    std::fill(pred_d.begin(), pred_d.end(), -1);
    std::fill(pred_s.begin(), pred_s.end(), -1);
    for (Eigen::Index i = 0; i < ns; ++i) {
      if (rem_s[i] > kMassFloor) {
        dist_s[i] = 0.0;
        pred_s[static_cast<std::size_t>(i)] = -2;
      }
    }

    Eigen::Index target = -1;
    double target_dist = inf;
    while (true) {
      Eigen::Index node = -1;
      bool node_is_sink = false;
      double best = inf;
      for (Eigen::Index i = 0; i < ns; ++i) {
        if (!done_s[static_cast<std::size_t>(i)] && dist_s[i] < best) {
          best = dist_s[i];
          node = i;
          node_is_sink = false;
        }
      }
      for (Eigen::Index j = 0; j < nd; ++j) {
        if (!done_d[static_cast<std::size_t>(j)] && dist_d[j] < best) {
          best = dist_d[j];
          node = j;
          node_is_sink = true;
        }
      }
      if (node < 0) break;
      if (node_is_sink) {
        done_d[static_cast<std::size_t>(node)] = 1;
        if (rem_d[node] > kMassFloor) {
          target = node;
          target_dist = best;
          break;
        }
        for (Eigen::Index i = 0; i < ns; ++i) {
          if (done_s[static_cast<std::size_t>(i)]) continue;
          if (flow(i, node) <= kMassFloor) continue;
          double rc = -cost(static_cast<std::uint32_t>(i),
                            static_cast<std::uint32_t>(node)) +
                      pot_d[node] - pot_s[i];
          if (rc < 0.0) rc = 0.0;
          const double cand = best + rc;
          if (cand < dist_s[i]) {
            dist_s[i] = cand;
            pred_s[static_cast<std::size_t>(i)] = node;
          }
        }
      } else {
        done_s[static_cast<std::size_t>(node)] = 1;
        for (Eigen::Index j = 0; j < nd; ++j) {
          if (done_d[static_cast<std::size_t>(j)]) continue;
          double rc = cost(static_cast<std::uint32_t>(node),
                           static_cast<std::uint32_t>(j)) +
                      pot_s[node] - pot_d[j];
          if (rc < 0.0) rc = 0.0;
          const double cand = best + rc;
          if (cand < dist_d[j]) {
            dist_d[j] = cand;
            pred_d[static_cast<std::size_t>(j)] = node;
          }
        }
      }
    }

    if (target < 0) break;
    for (Eigen::Index i = 0; i < ns; ++i)
      pot_s[i] += std::min(dist_s[i], target_dist);
    for (Eigen::Index j = 0; j < nd; ++j)
      pot_d[j] += std::min(dist_d[j], target_dist);

    double delta = rem_d[target];
    Eigen::Index root = -1;
    {
      Eigen::Index sink = target;
      while (true) {
        const Eigen::Index src = pred_d[static_cast<std::size_t>(sink)];
        const Eigen::Index back = pred_s[static_cast<std::size_t>(src)];
        if (back == -2) {
          delta = std::min(delta, rem_s[src]);
          root = src;
          break;
        }
        delta = std::min(delta, flow(src, back));
        sink = back;
      }
    }
    {
      Eigen::Index sink = target;
      while (true) {
        const Eigen::Index src = pred_d[static_cast<std::size_t>(sink)];
        flow(src, sink) += delta;
        const Eigen::Index back = pred_s[static_cast<std::size_t>(src)];
        if (back == -2 && src == root) break;
        flow(src, back) -= delta;
        if (flow(src, back) <= kMassFloor) flow(src, back) = 0.0;
        sink = back;
      }
    }
    rem_s[root] -= delta;
    if (rem_s[root] <= kMassFloor) rem_s[root] = 0.0;
    rem_d[target] -= delta;
    if (rem_d[target] <= kMassFloor) rem_d[target] = 0.0;
  }

  for (Eigen::Index i = 0; i < ns; ++i) {
    if (rem_s[i] <= 0.0) continue;
    Eigen::Index j = -1;
    double best = -1.0;
    for (Eigen::Index cand = 0; cand < nd; ++cand) {
      const double room = rem_d[cand] > 0.0 ? rem_d[cand] : demand[cand];
      if (room > best) {
        best = room;
        j = cand;
      }
    }
    flow(i, j) += rem_s[i];
    if (rem_d[j] > 0.0) rem_d[j] = std::max(rem_d[j] - rem_s[i], 0.0);
    rem_s[i] = 0.0;
  }

  TransportPlan plan;
  KahanSum total_cost;
  for (Eigen::Index i = 0; i < ns; ++i) {
    for (Eigen::Index j = 0; j < nd; ++j) {
      if (flow(i, j) <= 0.0) continue;
      plan.entries.push_back({static_cast<std::uint32_t>(i),
                              static_cast<std::uint32_t>(j), flow(i, j)});
      total_cost.add(flow(i, j) *
                     cost(static_cast<std::uint32_t>(i),
                          static_cast<std::uint32_t>(j)));
    }
  }
  plan.cost = total_cost.value();
  return plan;
}

double w2_lower_bound(const Distribution& r, const Distribution& s) {
  if (!r.space().same_shape(s.space()))
    throw std::invalid_argument("w2_lower_bound: space mismatch");
  const std::size_t n = r.space().num_sites();
  KahanSum sum;
  for (std::size_t i = 0; i < n; ++i) {
    const double tv = tv_distance(marginal(r, {i}), marginal(s, {i}));
    sum.add(tv * tv);
  }
  return std::sqrt(sum.value());
}

W2Result w2_distance(const Distribution& r, const Distribution& s,
                     const W2Options& options) {
  if (!r.space().same_shape(s.space()))
    throw std::invalid_argument("w2_distance: space mismatch");
  const auto states = static_cast<std::uint64_t>(r.space().num_states());
  if (states * states > options.pair_cap)
    throw SolverError("w2_distance: state pair budget exceeded");

  const auto table = symbol_table(r.space());
  const Eigen::Index n = table.cols();
  Eigen::MatrixXd cost_buf;
  const auto lmo = [&](const Eigen::VectorXd& direction) {
    fill_disagreement_costs(table, direction, cost_buf);
    return min_cost_transport(
        r.weights(), s.weights(),
        [&](std::uint32_t a, std::uint32_t b) { return cost_buf(a, b); });
  };

  std::vector<TransportPlan> plans;
  std::vector<Eigen::VectorXd> atom_m;
  plans.push_back(lmo(Eigen::VectorXd::Ones(n)));
  atom_m.push_back(plan_site_disagreement(plans.back(), table));
  Eigen::VectorXd weights = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd m = atom_m[0];

  double gap = std::numeric_limits<double>::infinity();
  long it = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (; it < options.max_iterations; ++it) {
    const TransportPlan vertex = lmo(2.0 * m);
    const Eigen::VectorXd mv = plan_site_disagreement(vertex, table);
    gap = 2.0 * (m.dot(m) - m.dot(mv));
    if (gap < 0.0) gap = 0.0;
    if (gap <= options.tol) break;

    if (gap < best_gap - 1e-18) {
      best_gap = gap;
      stalled = 0;
    } else if (++stalled > 200) {
      throw SolverError("w2_distance: no progress within stall window");
    }

    bool duplicate = false;
    for (const auto& existing : atom_m) {
      if ((existing - mv).lpNorm<Eigen::Infinity>() < 1e-15) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) {
      plans.push_back(vertex);
      atom_m.push_back(mv);
    }

    weights = min_norm_point(atom_m);
    std::vector<TransportPlan> kept_plans;
    std::vector<Eigen::VectorXd> kept_m;
    std::vector<double> kept_w;
    for (Eigen::Index j = 0; j < weights.size(); ++j) {
      if (weights[j] > 1e-16) {
        kept_plans.push_back(std::move(plans[static_cast<std::size_t>(j)]));
        kept_m.push_back(std::move(atom_m[static_cast<std::size_t>(j)]));
        kept_w.push_back(weights[j]);
      }
    }
    plans = std::move(kept_plans);
    atom_m = std::move(kept_m);
    weights.resize(static_cast<Eigen::Index>(kept_w.size()));
    for (std::size_t j = 0; j < kept_w.size(); ++j)
      weights[static_cast<Eigen::Index>(j)] = kept_w[j];
    const double wsum = weights.sum();
    if (wsum > 0.0) weights /= wsum;

    m.setZero();
    for (std::size_t j = 0; j < atom_m.size(); ++j)
      m += weights[static_cast<Eigen::Index>(j)] * atom_m[j];
  }
  if (gap > options.tol)
    throw SolverError("w2_distance: iteration budget exhausted");

  W2Result result;
  result.value = std::sqrt(m.squaredNorm());
  result.gap = gap;
  result.lower_bound = w2_lower_bound(r, s);
  result.iterations = it;
  result.site_disagreement = m;
  if (options.keep_coupling) {
    Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
    for (std::size_t j = 0; j < plans.size(); ++j) {
      const double wj = weights[static_cast<Eigen::Index>(j)];
      for (const auto& e : plans[j].entries)
        joint(e.from, e.to) += wj * e.mass;
    }
    result.coupling.emplace(r.space_ptr(), std::move(joint));
  }
  return result;
}

BoundCheck w2_vs_tv_bound(const Distribution& r, const Distribution& s,
                          const W2Options& options) {
  const double w2 = w2_distance(r, s, options).value;
  const double tv = tv_distance(r, s);
  const double n = static_cast<double>(r.space().num_sites());
  return {w2 * w2, n * tv * tv};
}

double w2_secondary_estimate(const Distribution& r, const Distribution& s,
                             std::uint64_t seed, long iterations) {
  if (!r.space().same_shape(s.space()))
    throw std::invalid_argument("w2_secondary_estimate: space mismatch");
  const auto table = symbol_table(r.space());
  const Eigen::Index n = table.cols();
  Rng rng(seed);

  Eigen::MatrixXd cost_buf;
  const auto lmo = [&](const Eigen::VectorXd& direction) {
    fill_disagreement_costs(table, direction, cost_buf);
    return min_cost_transport(
        r.weights(), s.weights(),
        [&](std::uint32_t a, std::uint32_t b) { return cost_buf(a, b); });
  };

  // The independent coupling r x s is always feasible; its per site
  // disagreement only involves the site marginals.
  std::vector<Eigen::VectorXd> starts;
  {
    Eigen::VectorXd indep(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto site = static_cast<std::size_t>(i);
      const Distribution ri = marginal(r, {site});
      const Distribution si = marginal(s, {site});
      KahanSum agree;
      for (std::uint64_t x = 0; x < ri.space().num_states(); ++x)
        agree.add(ri[x] * si[x]);
      indep[i] = 1.0 - agree.value();
    }
    starts.push_back(indep);
  }
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd noise(n);
    for (Eigen::Index i = 0; i < n; ++i) noise[i] = rng.uniform(0.05, 1.0);
    starts.push_back(plan_site_disagreement(lmo(noise), table));
  }
  Eigen::VectorXd mix(starts.size());
  for (Eigen::Index j = 0; j < mix.size(); ++j) mix[j] = rng.uniform(0.1, 1.0);
  mix /= mix.sum();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
  for (std::size_t j = 0; j < starts.size(); ++j)
    m += mix[static_cast<Eigen::Index>(j)] * starts[j];

  double best = m.squaredNorm();
  for (long it = 0; it < iterations; ++it) {
    const Eigen::VectorXd mv = plan_site_disagreement(lmo(2.0 * m), table);
    const Eigen::VectorXd d = mv - m;
    const double dd = d.squaredNorm();
    if (dd <= 0.0) break;
    double step = -m.dot(d) / dd;
    step = std::clamp(step, 0.0, 1.0);
    if (step == 0.0) break;
    m += step * d;
    best = std::min(best, m.squaredNorm());
  }
  return std::sqrt(best);
}

namespace {

struct LevelFamily {
  std::vector<IndexSet> sets;
};

LevelFamily nested_levels(const SiteSet& sites, const Site& k) {
  std::vector<int> dist(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i)
    dist[i] = rho(k, sites.sites()[i]);
  std::vector<int> cuts(dist.begin(), dist.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  LevelFamily fam;
  for (const int cut : cuts) {
    IndexSet set;
    for (std::size_t i = 0; i < sites.size(); ++i)
      if (dist[i] >= cut) set.push_back(i);
    fam.sets.push_back(std::move(set));
  }
  return fam;
}

double agreement_mass(const Eigen::MatrixXd& w,
                      const Eigen::Matrix<int, Eigen::Dynamic,
                                          Eigen::Dynamic>& table,
                      const IndexSet& set) {
  KahanSum agree;
  for (Eigen::Index a = 0; a < w.rows(); ++a) {
    for (Eigen::Index b = 0; b < w.cols(); ++b) {
      if (w(a, b) == 0.0) continue;
      bool same = true;
      for (const std::size_t i : set) {
        if (table(a, static_cast<Eigen::Index>(i)) !=
            table(b, static_cast<Eigen::Index>(i))) {
          same = false;
          break;
        }
      }
      if (same) agree.add(w(a, b));
    }
  }
  return agree.value();
}

Eigen::MatrixXd goldstein_greedy(const Distribution& mu,
                                 const Distribution& nu,
                                 const LevelFamily& fam) {
  const std::size_t levels = fam.sets.size();
  const std::size_t inner = levels - 1;

  Distribution mu_in = marginal(mu, fam.sets[inner]);
  Distribution nu_in = marginal(nu, fam.sets[inner]);
  Eigen::MatrixXd psi = maximal_coupling(mu_in, nu_in).weights();

  for (std::size_t step = inner; step-- > 0;) {
    const IndexSet& wide = fam.sets[step];
    const IndexSet& narrow = fam.sets[step + 1];
    const Distribution mu_w = marginal(mu, wide);
    const Distribution nu_w = marginal(nu, wide);
    const ConfigSpace& wspace = mu_w.space();

    IndexSet fresh_pos;
    IndexSet narrow_pos;
    for (std::size_t pos = 0; pos < wide.size(); ++pos) {
      if (std::find(narrow.begin(), narrow.end(), wide[pos]) == narrow.end())
        fresh_pos.push_back(pos);
      else
        narrow_pos.push_back(pos);
    }

    const auto wide_states = static_cast<Eigen::Index>(wspace.num_states());
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(wide_states, wide_states);
    const ConfigSpace narrow_space(wspace.alphabet(),
                                   wspace.sites().subset(narrow_pos));

    for (Eigen::Index a = 0; a < psi.rows(); ++a) {
      std::vector<int> ctx_a;
      narrow_space.decode_into(static_cast<std::uint64_t>(a), ctx_a);
      std::optional<Distribution> cond_a;
      for (Eigen::Index b = 0; b < psi.cols(); ++b) {
        const double mass = psi(a, b);
        if (mass <= 0.0) continue;
        if (!cond_a) {
          auto slice = conditional(mu_w, fresh_pos, ctx_a);
          if (!slice.defined())
            throw SolverError("goldstein: vanished conditional");
          cond_a.emplace(*std::move(slice.law));
        }
        std::vector<int> ctx_b;
        narrow_space.decode_into(static_cast<std::uint64_t>(b), ctx_b);
        auto slice_b = conditional(nu_w, fresh_pos, ctx_b);
        if (!slice_b.defined())
          throw SolverError("goldstein: vanished conditional");
        const Distribution cond_b = *std::move(slice_b.law);

        const auto fresh_count =
            static_cast<Eigen::Index>(cond_a->space().num_states());
        Eigen::MatrixXd block;
        if (a == b) {
          block = maximal_coupling(*cond_a, cond_b).weights();
        } else {
          block.resize(fresh_count, fresh_count);
          for (Eigen::Index u = 0; u < fresh_count; ++u)
            for (Eigen::Index v = 0; v < fresh_count; ++v)
              block(u, v) = (*cond_a)[static_cast<std::uint64_t>(u)] *
                            cond_b[static_cast<std::uint64_t>(v)];
        }
        for (Eigen::Index u = 0; u < fresh_count; ++u) {
          std::vector<int> sub_u;
          cond_a->space().decode_into(static_cast<std::uint64_t>(u), sub_u);
          const auto row =
              static_cast<Eigen::Index>(wspace.combine(fresh_pos, sub_u, ctx_a));
          for (Eigen::Index v = 0; v < fresh_count; ++v) {
            if (block(u, v) == 0.0) continue;
            std::vector<int> sub_v;
            cond_b.space().decode_into(static_cast<std::uint64_t>(v), sub_v);
            const auto col = static_cast<Eigen::Index>(
                wspace.combine(fresh_pos, sub_v, ctx_b));
            next(row, col) += mass * block(u, v);
          }
        }
      }
    }
    psi = std::move(next);
  }
  return psi;
}

Eigen::MatrixXd goldstein_lp(const Distribution& mu, const Distribution& nu,
                             const LevelFamily& fam,
                             const Eigen::Matrix<int, Eigen::Dynamic,
                                                 Eigen::Dynamic>& table,
                             const std::vector<double>& level_tv) {
  const auto states = static_cast<Eigen::Index>(mu.space().num_states());
  const auto pairs = states * states;
  const auto levels = static_cast<Eigen::Index>(fam.sets.size());
  const Eigen::Index rows = 2 * states + levels;

  LinearProgram lp;
  lp.A = Eigen::MatrixXd::Zero(rows, pairs);
  lp.b = Eigen::VectorXd::Zero(rows);
  lp.c = Eigen::VectorXd::Zero(pairs);
  for (Eigen::Index a = 0; a < states; ++a) {
    for (Eigen::Index b = 0; b < states; ++b) {
      const Eigen::Index col = a * states + b;
      lp.A(a, col) = 1.0;
      lp.A(states + b, col) = 1.0;
      for (Eigen::Index l = 0; l < levels; ++l) {
        bool same = true;
        for (const std::size_t i : fam.sets[static_cast<std::size_t>(l)]) {
          if (table(a, static_cast<Eigen::Index>(i)) !=
              table(b, static_cast<Eigen::Index>(i))) {
            same = false;
            break;
          }
        }
        if (same) lp.A(2 * states + l, col) = 1.0;
      }
    }
  }
  for (Eigen::Index a = 0; a < states; ++a) {
    lp.b[a] = mu[static_cast<std::uint64_t>(a)];
    lp.b[states + a] = nu[static_cast<std::uint64_t>(a)];
  }
  for (Eigen::Index l = 0; l < levels; ++l)
    lp.b[2 * states + l] = 1.0 - level_tv[static_cast<std::size_t>(l)];

  const LpResult sol = solve_lp(lp);
  if (sol.status != LpStatus::optimal)
    throw SolverError("goldstein: feasibility program failed");
  Eigen::MatrixXd w(states, states);
  for (Eigen::Index a = 0; a < states; ++a)
    for (Eigen::Index b = 0; b < states; ++b)
      w(a, b) = std::max(sol.x[a * states + b], 0.0);
  return w;
}

}  // namespace

GoldsteinResult goldstein_coupling(const Distribution& mu,
                                   const Distribution& nu, const Site& k) {
  if (!mu.space().same_shape(nu.space()))
    throw std::invalid_argument("goldstein_coupling: space mismatch");
  const SiteSet& sites = mu.space().sites();
  for (const Site& site : sites.sites()) {
    if (site == k)
      throw std::invalid_argument("goldstein_coupling: k inside block");
  }

  const LevelFamily fam = nested_levels(sites, k);
  const auto table = symbol_table(mu.space());

  std::vector<double> level_tv(fam.sets.size());
  for (std::size_t l = 0; l < fam.sets.size(); ++l) {
    level_tv[l] =
        tv_distance(marginal(mu, fam.sets[l]), marginal(nu, fam.sets[l]));
  }

  constexpr double kLevelTol = 1e-9;
  Eigen::MatrixXd w;
  bool used_lp = false;
  bool greedy_ok = true;
  try {
    w = goldstein_greedy(mu, nu, fam);
  } catch (const SolverError&) {
    greedy_ok = false;
  }
  if (greedy_ok) {
    for (std::size_t l = 0; l < fam.sets.size(); ++l) {
      const double dis = 1.0 - agreement_mass(w, table, fam.sets[l]);
      if (std::abs(dis - level_tv[l]) > kLevelTol) {
        greedy_ok = false;
        break;
      }
    }
  }
  if (!greedy_ok) {
    w = goldstein_lp(mu, nu, fam, table, level_tv);
    used_lp = true;
  }

  GoldsteinResult result{Coupling(mu.space_ptr(), std::move(w)),
                         {},
                         Eigen::VectorXd(),
                         used_lp};
  for (std::size_t l = 0; l < fam.sets.size(); ++l) {
    GoldsteinLevel level;
    level.set = fam.sets[l];
    level.tv = level_tv[l];
    level.disagreement =
        1.0 - agreement_mass(result.coupling.weights(), table, fam.sets[l]);
    result.levels.push_back(std::move(level));
  }
  result.site_disagreement = result.coupling.site_disagreement();
  return result;
}

GoldsteinResult goldstein_coupling(const LocalSpecEnsemble& spec,
                                   const IndexSet& M,
                                   const std::vector<int>& ctx_y,
                                   const std::vector<int>& ctx_z) {
  if (ctx_y.size() != ctx_z.size())
    throw std::invalid_argument("goldstein_coupling: context size mismatch");
  std::size_t diff = ctx_y.size();
  std::size_t count = 0;
  for (std::size_t i = 0; i < ctx_y.size(); ++i) {
    if (ctx_y[i] != ctx_z[i]) {
      diff = i;
      ++count;
    }
  }
  if (count != 1)
    throw std::invalid_argument(
        "goldstein_coupling: contexts must differ at exactly one site");

  const SiteSet& all = spec.joint().space().sites();
  const IndexSet rest = all.complement(M);
  const Site k = all.sites()[rest[diff]];

  const ConditionalSlice slice_y = spec.block_conditional(M, ctx_y);
  const ConditionalSlice slice_z = spec.block_conditional(M, ctx_z);
  if (!slice_y.defined() || !slice_z.defined())
    throw std::invalid_argument("goldstein_coupling: context has no mass");
  return goldstein_coupling(*slice_y.law, *slice_z.law, k);
}

}  // namespace spinlab
