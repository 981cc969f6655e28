#pragma once

// Exact solves of the transportation-structure matching LPs.
//
// Two problems are supported:
//   - pooled matching: max sum v(i,j) x(i,j) subject to row sums <= d(i),
//     column sums <= s(j), x >= 0;
//   - two-group matching: control and treated demand share the supply
//     columns; control rows earn v, treated rows earn the cost-discounted
//     weights.
//
// Both are solved by a primal simplex specialized to the transportation
// structure. The inequality problem is embedded in a balanced equality
// problem by adding one slack row (unused supply) and one slack column
// (unmatched demand); the slack/slack cell then carries the total matched
// mass, which pins the dual normalization so that the reported duals are
// optimal for the original inequality LP (all nonnegative). Pivots follow
// Bland's rule (lowest-index entering and leaving cell), which makes the
// solver deterministic and immune to cycling under degeneracy.

#include <algorithm>
#include <cstdint>
#include <utility>

#include "matchlab/core.hpp"
#include "matchlab/model.hpp"

namespace matchlab {

struct CeProblem {
  MatchingInstance instance;
  Vec d;  // demand per type, size n_d, nonnegative
  Vec s;  // supply per type, size n_s, nonnegative

  void validate() const {
    instance.validate();
    if (d.size() != static_cast<std::size_t>(instance.n_d) ||
        s.size() != static_cast<std::size_t>(instance.n_s))
      throw InputError("CeProblem: vector sizes do not match the instance");
    for (double x : d)
      if (!(x >= 0.0)) throw InputError("CeProblem: demand must be >= 0");
    for (double x : s)
      if (!(x >= 0.0)) throw InputError("CeProblem: supply must be >= 0");
  }
};

struct CiProblem {
  MatchingInstance instance;
  Vec d_con;  // control demand per type
  Vec d_tre;  // treated demand per type
  Vec s;      // shared supply per type
  CostModel cost_model;

  void validate() const {
    instance.validate();
    cost_model.validate_for(instance);
    const auto nd = static_cast<std::size_t>(instance.n_d);
    const auto ns = static_cast<std::size_t>(instance.n_s);
    if (d_con.size() != nd || d_tre.size() != nd || s.size() != ns)
      throw InputError("CiProblem: vector sizes do not match the instance");
    for (double x : d_con)
      if (!(x >= 0.0)) throw InputError("CiProblem: control demand must be >= 0");
    for (double x : d_tre)
      if (!(x >= 0.0)) throw InputError("CiProblem: treated demand must be >= 0");
    for (double x : s)
      if (!(x >= 0.0)) throw InputError("CiProblem: supply must be >= 0");
  }
};

struct CeSolution {
  double objective = 0.0;
  Vec flow;          // row-major n_d x n_s
  Vec demand_dual;   // size n_d, >= 0
  Vec supply_dual;   // size n_s, >= 0
  // True when fewer variables are strictly positive than constraints are
  // tight, i.e. the optimal basis is degenerate and the dual may be
  // non-unique.
  bool degenerate = false;
};

struct CiSolution {
  double objective = 0.0;
  Vec flow_con;         // row-major n_d x n_s, control flows
  Vec flow_tre;         // row-major n_d x n_s, treated flows
  Vec demand_dual_con;  // size n_d
  Vec demand_dual_tre;  // size n_d
  Vec supply_dual;      // size n_s
  bool degenerate = false;
};

namespace detail {

// Balanced transportation maximization on (rows + 1) x (cols + 1) cells.
// Row `rows` is the slack row (absorbs unused column capacity), column
// `cols` the slack column (absorbs unmatched row capacity); both carry zero
// value. Produces flows, inequality-form duals, and a basis-degeneracy flag.
struct TransportResult {
  Vec flow;  // row-major rows x cols (real cells only)
  Vec row_dual;
  Vec col_dual;
  bool degenerate = false;
};

class TransportSimplex {
 public:
  TransportSimplex(int rows, int cols, const Vec& values, const Vec& row_cap,
                   const Vec& col_cap)
      : r_(rows), c_(cols), m_(rows + 1), n_(cols + 1), values_(values),
        row_cap_(row_cap), col_cap_(col_cap) {}

  TransportResult solve() {
    const double total_rows = sum(row_cap_);
    const double total_cols = sum(col_cap_);
    TransportResult out;
    out.flow.assign(static_cast<std::size_t>(r_) * c_, 0.0);
    out.row_dual.assign(r_, 0.0);
    out.col_dual.assign(c_, 0.0);

    // Empty-side shortcuts: nothing can be matched, and the minimal optimal
    // dual prices the absent side at its best per-unit match value (the
    // present side's capacities are slack, forcing its duals to zero).
    if (total_rows <= 0.0 || total_cols <= 0.0) {
      if (total_rows <= 0.0) {
        for (int i = 0; i < r_; ++i) {
          double m = 0.0;
          for (int j = 0; j < c_; ++j) m = std::max(m, value(i, j));
          out.row_dual[i] = m;
        }
      } else {
        for (int j = 0; j < c_; ++j) {
          double m = 0.0;
          for (int i = 0; i < r_; ++i) m = std::max(m, value(i, j));
          out.col_dual[j] = m;
        }
      }
      out.degenerate = true;  // some capacity constraint is tight at zero flow
      return out;
    }

    init_tableau(total_rows, total_cols);
    northwest_start();
    run_simplex();
    extract(out);
    return out;
  }

 private:
  int cell(int i, int j) const { return i * n_ + j; }
  double value(int i, int j) const {
    return (i < r_ && j < c_) ? values_[static_cast<std::size_t>(i) * c_ + j]
                              : 0.0;
  }

  void init_tableau(double total_rows, double total_cols) {
    x_.assign(static_cast<std::size_t>(m_) * n_, 0.0);
    basic_.assign(static_cast<std::size_t>(m_) * n_, 0);
    u_.assign(m_, 0.0);
    w_.assign(n_, 0.0);
    cap_r_.assign(m_, 0.0);
    cap_c_.assign(n_, 0.0);
    for (int i = 0; i < r_; ++i) cap_r_[i] = row_cap_[i];
    cap_r_[r_] = total_cols;  // slack row holds all potential column slack
    for (int j = 0; j < c_; ++j) cap_c_[j] = col_cap_[j];
    cap_c_[c_] = total_rows;  // slack column holds all potential row slack
    scale_ = std::max(1.0, std::max(total_rows, total_cols));
    scale_value_ = std::max(1.0, max_abs(values_));
  }

  void northwest_start() {
    Vec rem_r = cap_r_, rem_c = cap_c_;
    int i = 0, j = 0;
    while (true) {
      const double t = std::min(rem_r[i], rem_c[j]);
      x_[cell(i, j)] = t;
      basic_[cell(i, j)] = 1;
      rem_r[i] -= t;
      rem_c[j] -= t;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (rem_r[i] <= 0.0 && i < m_ - 1)
        ++i;
      else
        ++j;
    }
  }

  // Solve u(i) + w(j) = value(i, j) over the basis tree, rooted at the slack
  // row with u = 0. Because the slack/slack cell is basic whenever anything
  // is matched, this normalization forces the slack column dual to 0 as
  // well, which is exactly the inequality-form normalization.
  void compute_duals() {
    std::vector<int> seen_r(m_, 0), seen_c(n_, 0);
    std::vector<int> stack;
    stack.reserve(m_ + n_);
    u_[m_ - 1] = 0.0;
    seen_r[m_ - 1] = 1;
    stack.push_back(m_ - 1);           // row nodes: [0, m_), col nodes: m_ + j
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (node < m_) {
        const int i = node;
        for (int j = 0; j < n_; ++j)
          if (basic_[cell(i, j)] && !seen_c[j]) {
            w_[j] = value(i, j) - u_[i];
            seen_c[j] = 1;
            stack.push_back(m_ + j);
          }
      } else {
        const int j = node - m_;
        for (int i = 0; i < m_; ++i)
          if (basic_[cell(i, j)] && !seen_r[i]) {
            u_[i] = value(i, j) - w_[j];
            seen_r[i] = 1;
            stack.push_back(i);
          }
      }
    }
    for (int i = 0; i < m_; ++i)
      if (!seen_r[i]) throw InternalError("transport simplex: basis not a tree");
    for (int j = 0; j < n_; ++j)
      if (!seen_c[j]) throw InternalError("transport simplex: basis not a tree");
  }

  // Find the unique basis path from row node `i0` to column node `j0`.
  // Returned as the list of basic cells along the path, starting with a cell
  // in row i0 and ending with a cell in column j0.
  std::vector<std::pair<int, int>> basis_path(int i0, int j0) const {
    const int nodes = m_ + n_;
    std::vector<int> parent(nodes, -2);
    std::vector<int> queue;
    queue.reserve(nodes);
    queue.push_back(i0);
    parent[i0] = -1;
    std::size_t head = 0;
    while (head < queue.size()) {
      const int node = queue[head++];
      if (node == m_ + j0) break;
      if (node < m_) {
        const int i = node;
        for (int j = 0; j < n_; ++j)
          if (basic_[cell(i, j)] && parent[m_ + j] == -2) {
            parent[m_ + j] = node;
            queue.push_back(m_ + j);
          }
      } else {
        const int j = node - m_;
        for (int i = 0; i < m_; ++i)
          if (basic_[cell(i, j)] && parent[i] == -2) {
            parent[i] = node;
            queue.push_back(i);
          }
      }
    }
    if (parent[m_ + j0] == -2)
      throw InternalError("transport simplex: basis tree is disconnected");
    std::vector<std::pair<int, int>> path;
    int node = m_ + j0;
    while (parent[node] != -1) {
      const int par = parent[node];
      const int i = std::min(node, par);
      const int j = std::max(node, par) - m_;
      path.emplace_back(i, j);
      node = par;
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  void run_simplex() {
    const long max_iters = 20000L * (m_ + n_);
    for (long iter = 0; iter < max_iters; ++iter) {
      compute_duals();
      int ei = -1, ej = -1;
      for (int i = 0; i < m_ && ei < 0; ++i)
        for (int j = 0; j < n_; ++j) {
          if (basic_[cell(i, j)]) continue;
          if (value(i, j) - u_[i] - w_[j] > kPivotTol * scale_value_) {
            ei = i;
            ej = j;
            break;
          }
        }
      if (ei < 0) return;  // optimal

      // The entering cell closes a unique cycle with the basis path from its
      // row to its column. Flow alternates +/- around the cycle starting
      // with + on the entering cell, so the path cells at even positions
      // are decreased.
      auto path = basis_path(ei, ej);
      double theta = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < path.size(); k += 2)
        theta = std::min(theta, x_[cell(path[k].first, path[k].second)]);
      // Lowest-index tie break among the cells attaining the minimum ratio.
      int leave_i = -1, leave_j = -1;
      for (std::size_t k = 0; k < path.size(); k += 2) {
        const auto [i, j] = path[k];
        if (x_[cell(i, j)] > theta + 1e-15 * scale_) continue;
        if (leave_i < 0 || cell(i, j) < cell(leave_i, leave_j)) {
          leave_i = i;
          leave_j = j;
        }
      }
      if (leave_i < 0)
        throw InternalError("transport simplex: no leaving cell");
      x_[cell(ei, ej)] += theta;
      for (std::size_t k = 0; k < path.size(); ++k) {
        const auto [i, j] = path[k];
        if (k % 2 == 0)
          x_[cell(i, j)] -= theta;
        else
          x_[cell(i, j)] += theta;
      }
      x_[cell(leave_i, leave_j)] = 0.0;  // exact leave
      basic_[cell(leave_i, leave_j)] = 0;
      basic_[cell(ei, ej)] = 1;
    }
    throw InternalError("transport simplex: iteration limit exceeded");
  }

  void extract(TransportResult& out) {
    compute_duals();
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) {
        double f = x_[cell(i, j)];
        if (f < 0.0) f = 0.0;  // clamp pivot roundoff
        out.flow[static_cast<std::size_t>(i) * c_ + j] = f;
      }
    for (int i = 0; i < r_; ++i) out.row_dual[i] = std::max(0.0, u_[i]);
    for (int j = 0; j < c_; ++j) out.col_dual[j] = std::max(0.0, w_[j]);

    // Basis degeneracy: a balanced-problem basis holds m + n - 1 cells; if
    // fewer carry strictly positive flow, some basic variable is stuck at
    // zero and the dual is potentially non-unique.
    const double flow_tol = kTol * scale_;
    int positive = 0;
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j)
        if (x_[cell(i, j)] > flow_tol) ++positive;
    out.degenerate = positive < m_ + n_ - 1;
  }

  int r_, c_, m_, n_;
  const Vec& values_;
  const Vec& row_cap_;
  const Vec& col_cap_;
  Vec x_, u_, w_, cap_r_, cap_c_;
  std::vector<char> basic_;
  double scale_ = 1.0;
  // Pivot threshold scale for reduced costs (value units, not mass units).
  double scale_value_ = 1.0;
};

}  // namespace detail

// Solves the pooled matching LP. Zero-demand and zero-supply types stay in
// the tableau; the solver is deterministic for identical inputs.
inline CeSolution solve_ce(const CeProblem& p) {
  p.validate();
  detail::TransportSimplex solver(p.instance.n_d, p.instance.n_s,
                                  p.instance.v, p.d, p.s);
  auto res = solver.solve();
  CeSolution sol;
  sol.flow = std::move(res.flow);
  sol.demand_dual = std::move(res.row_dual);
  sol.supply_dual = std::move(res.col_dual);
  sol.degenerate = res.degenerate;
  double obj = 0.0;
  for (int i = 0; i < p.instance.n_d; ++i)
    for (int j = 0; j < p.instance.n_s; ++j)
      obj += p.instance.value(i, j) *
             sol.flow[static_cast<std::size_t>(i) * p.instance.n_s + j];
  sol.objective = obj;
  return sol;
}

// Solves the two-group matching LP: control rows first, treated rows second,
// sharing the supply columns. Treated rows earn the discounted weights of
// the problem's cost model.
inline CiSolution solve_ci(const CiProblem& p) {
  p.validate();
  const int nd = p.instance.n_d, ns = p.instance.n_s;
  Vec values(static_cast<std::size_t>(2 * nd) * ns);
  const Vec treated = discounted_weights(p.instance, p.cost_model);
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < ns; ++j) {
      values[static_cast<std::size_t>(i) * ns + j] = p.instance.value(i, j);
      values[static_cast<std::size_t>(nd + i) * ns + j] =
          treated[static_cast<std::size_t>(i) * ns + j];
    }
  Vec caps(2 * static_cast<std::size_t>(nd));
  for (int i = 0; i < nd; ++i) {
    caps[i] = p.d_con[i];
    caps[nd + i] = p.d_tre[i];
  }
  detail::TransportSimplex solver(2 * nd, ns, values, caps, p.s);
  auto res = solver.solve();
  CiSolution sol;
  sol.flow_con.assign(static_cast<std::size_t>(nd) * ns, 0.0);
  sol.flow_tre.assign(static_cast<std::size_t>(nd) * ns, 0.0);
  sol.demand_dual_con.assign(nd, 0.0);
  sol.demand_dual_tre.assign(nd, 0.0);
  for (int i = 0; i < nd; ++i) {
    sol.demand_dual_con[i] = res.row_dual[i];
    sol.demand_dual_tre[i] = res.row_dual[nd + i];
    for (int j = 0; j < ns; ++j) {
      sol.flow_con[static_cast<std::size_t>(i) * ns + j] =
          res.flow[static_cast<std::size_t>(i) * ns + j];
      sol.flow_tre[static_cast<std::size_t>(i) * ns + j] =
          res.flow[static_cast<std::size_t>(nd + i) * ns + j];
    }
  }
  sol.supply_dual = std::move(res.col_dual);
  sol.degenerate = res.degenerate;
  double obj = 0.0;
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < ns; ++j) {
      obj += p.instance.value(i, j) *
             sol.flow_con[static_cast<std::size_t>(i) * ns + j];
      obj += treated[static_cast<std::size_t>(i) * ns + j] *
             sol.flow_tre[static_cast<std::size_t>(i) * ns + j];
    }
  sol.objective = obj;
  return sol;
}

// Total treatment cost implied by a treated flow matrix: the flat fee per
// treated match under the fixed model, the withheld fraction of undiscounted
// match value under the proportional one.
inline double intervention_cost_from_flows(const MatchingInstance& inst,
                                           const CostModel& cm,
                                           const Vec& flow_tre) {
  if (flow_tre.size() != inst.v.size())
    throw InputError("intervention_cost: flow matrix has wrong size");
  double c = 0.0;
  if (cm.kind == CostKind::Fixed) {
    for (double f : flow_tre) c += f;
    c *= cm.kappa;
  } else {
    for (std::size_t k = 0; k < flow_tre.size(); ++k)
      c += cm.alpha * inst.v[k] * flow_tre[k];
  }
  return c;
}

// Treatment cost of a market state: solves the two-group LP and prices its
// treated flows.
inline double intervention_cost(const MatchingInstance& inst,
                                const CostModel& cm, const Vec& d_con,
                                const Vec& d_tre, const Vec& s) {
  CiProblem p{inst, d_con, d_tre, s, cm};
  return intervention_cost_from_flows(inst, cm, solve_ci(p).flow_tre);
}

// ---------------------------------------------------------------------------
// Exact enumeration oracle for small integer instances.

namespace detail {

struct BruteResult {
  double objective = 0.0;
  Vec flow;
};

inline void brute_require_integer(const Vec& x, const char* what) {
  for (double v : x) {
    if (std::fabs(v - std::round(v)) > 1e-9 || v < -1e-9)
      throw ScopeError(std::string("brute_force_matching: ") + what +
                       " must be small nonnegative integers");
  }
}

inline BruteResult brute_force_transport(int rows, int cols, const Vec& values,
                                         const Vec& row_cap,
                                         const Vec& col_cap) {
  brute_require_integer(row_cap, "row capacities");
  brute_require_integer(col_cap, "column capacities");
  std::vector<int> rcap(rows), ccap(cols);
  long total_r = 0, total_c = 0;
  for (int i = 0; i < rows; ++i) {
    rcap[i] = static_cast<int>(std::llround(row_cap[i]));
    total_r += rcap[i];
  }
  for (int j = 0; j < cols; ++j) {
    ccap[j] = static_cast<int>(std::llround(col_cap[j]));
    total_c += ccap[j];
  }
  if (total_r > 12 || total_c > 12)
    throw ScopeError("brute_force_matching: totals above 12 are outside the "
                     "oracle's scope");

  std::vector<int> flow(static_cast<std::size_t>(rows) * cols, 0);
  std::vector<int> best(flow);
  double best_obj = -1.0;
  // Depth-first over cells in row-major order, assigning every feasible
  // integer flow to each cell.
  auto rec = [&](auto&& self, int k, double acc) -> void {
    if (k == rows * cols) {
      if (acc > best_obj) {
        best_obj = acc;
        best = flow;
      }
      return;
    }
    const int i = k / cols, j = k % cols;
    const int cap = std::min(rcap[i], ccap[j]);
    for (int t = cap; t >= 0; --t) {
      flow[k] = t;
      rcap[i] -= t;
      ccap[j] -= t;
      self(self, k + 1, acc + t * values[k]);
      rcap[i] += t;
      ccap[j] += t;
      flow[k] = 0;
    }
  };
  rec(rec, 0, 0.0);

  BruteResult out;
  out.flow.assign(flow.size(), 0.0);
  for (std::size_t k = 0; k < flow.size(); ++k)
    out.flow[k] = static_cast<double>(best[k]);
  // Recompute the objective with the same row-major summation the simplex
  // wrapper uses so identical assignments produce identical doubles.
  double obj = 0.0;
  for (std::size_t k = 0; k < out.flow.size(); ++k)
    obj += values[k] * out.flow[k];
  out.objective = obj;
  return out;
}

}  // namespace detail

// Exhaustive-search optimum of the pooled problem. Scope: integer demand and
// supply with totals at most 12 (throws ScopeError otherwise).
inline detail::BruteResult brute_force_matching(const CeProblem& p) {
  p.validate();
  return detail::brute_force_transport(p.instance.n_d, p.instance.n_s,
                                       p.instance.v, p.d, p.s);
}

// Exhaustive-search optimum of the two-group problem, same scope rules on
// the pooled demand total.
inline detail::BruteResult brute_force_matching(const CiProblem& p) {
  p.validate();
  const int nd = p.instance.n_d, ns = p.instance.n_s;
  Vec values(static_cast<std::size_t>(2 * nd) * ns);
  const Vec treated = discounted_weights(p.instance, p.cost_model);
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < ns; ++j) {
      values[static_cast<std::size_t>(i) * ns + j] = p.instance.value(i, j);
      values[static_cast<std::size_t>(nd + i) * ns + j] =
          treated[static_cast<std::size_t>(i) * ns + j];
    }
  Vec caps(2 * static_cast<std::size_t>(nd));
  for (int i = 0; i < nd; ++i) {
    caps[i] = p.d_con[i];
    caps[nd + i] = p.d_tre[i];
  }
  return detail::brute_force_transport(2 * nd, ns, values, caps, p.s);
}

// ---------------------------------------------------------------------------
// Optimality certificate.

struct KktViolation {
  std::string what;
  double magnitude = 0.0;
};

namespace detail {

class KktChecker {
 public:
  KktChecker(int rows, int cols, const Vec& values, const Vec& row_cap,
             const Vec& col_cap, const Vec& flow, const Vec& row_dual,
             const Vec& col_dual, double objective, double tol)
      : r_(rows), c_(cols), values_(values), row_cap_(row_cap),
        col_cap_(col_cap), flow_(flow), row_dual_(row_dual),
        col_dual_(col_dual), objective_(objective), tol_(tol) {
    mass_scale_ = std::max(1.0, std::max(sum(row_cap), sum(col_cap)));
    value_scale_ = std::max(1.0, max_abs(values));
    money_scale_ = std::max(1.0, mass_scale_ * value_scale_);
  }

  std::vector<KktViolation> run() {
    check_primal();
    check_dual();
    check_slackness();
    check_gap();
    return std::move(violations_);
  }

 private:
  void report(const std::string& what, double mag) {
    violations_.push_back({what, mag});
  }
  double at(const Vec& m, int i, int j) const {
    return m[static_cast<std::size_t>(i) * c_ + j];
  }

  void check_primal() {
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j)
        if (at(flow_, i, j) < -tol_ * mass_scale_)
          report("negative flow at (" + std::to_string(i) + "," +
                     std::to_string(j) + ")",
                 -at(flow_, i, j));
    for (int i = 0; i < r_; ++i) {
      double rs = 0.0;
      for (int j = 0; j < c_; ++j) rs += at(flow_, i, j);
      if (rs > row_cap_[i] + tol_ * mass_scale_)
        report("row capacity exceeded at " + std::to_string(i),
               rs - row_cap_[i]);
    }
    for (int j = 0; j < c_; ++j) {
      double cs = 0.0;
      for (int i = 0; i < r_; ++i) cs += at(flow_, i, j);
      if (cs > col_cap_[j] + tol_ * mass_scale_)
        report("column capacity exceeded at " + std::to_string(j),
               cs - col_cap_[j]);
    }
  }

  void check_dual() {
    for (int i = 0; i < r_; ++i)
      if (row_dual_[i] < -tol_ * value_scale_)
        report("negative row dual at " + std::to_string(i), -row_dual_[i]);
    for (int j = 0; j < c_; ++j)
      if (col_dual_[j] < -tol_ * value_scale_)
        report("negative column dual at " + std::to_string(j), -col_dual_[j]);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) {
        const double slack = row_dual_[i] + col_dual_[j] - at(values_, i, j);
        if (slack < -tol_ * value_scale_)
          report("dual constraint violated at (" + std::to_string(i) + "," +
                     std::to_string(j) + ")",
                 -slack);
      }
  }

  void check_slackness() {
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) {
        const double p =
            at(flow_, i, j) * (row_dual_[i] + col_dual_[j] - at(values_, i, j));
        if (p > tol_ * money_scale_)
          report("flow/price slackness violated at (" + std::to_string(i) +
                     "," + std::to_string(j) + ")",
                 p);
      }
    for (int i = 0; i < r_; ++i) {
      double rs = 0.0;
      for (int j = 0; j < c_; ++j) rs += at(flow_, i, j);
      const double p = row_dual_[i] * (row_cap_[i] - rs);
      if (p > tol_ * money_scale_)
        report("row dual/capacity slackness violated at " + std::to_string(i),
               p);
    }
    for (int j = 0; j < c_; ++j) {
      double cs = 0.0;
      for (int i = 0; i < r_; ++i) cs += at(flow_, i, j);
      const double p = col_dual_[j] * (col_cap_[j] - cs);
      if (p > tol_ * money_scale_)
        report("column dual/capacity slackness violated at " +
                   std::to_string(j),
               p);
    }
  }

  void check_gap() {
    const double dual_obj = dot(row_dual_, row_cap_) + dot(col_dual_, col_cap_);
    const double gap = std::fabs(dual_obj - objective_);
    if (gap > tol_ * money_scale_)
      report("duality gap", gap);
  }

  int r_, c_;
  const Vec &values_, &row_cap_, &col_cap_, &flow_, &row_dual_, &col_dual_;
  double objective_, tol_;
  double mass_scale_ = 1.0, value_scale_ = 1.0, money_scale_ = 1.0;
  std::vector<KktViolation> violations_;
};

}  // namespace detail

// Certifies optimality of a pooled-problem solution: primal and dual
// feasibility, complementary slackness, and a zero duality gap, all within
// `tol` relative to the problem scale. Empty result == certified optimal.
inline std::vector<KktViolation> verify_kkt(const CeProblem& p,
                                            const CeSolution& sol,
                                            double tol = kTol) {
  p.validate();
  detail::KktChecker checker(p.instance.n_d, p.instance.n_s, p.instance.v,
                             p.d, p.s, sol.flow, sol.demand_dual,
                             sol.supply_dual, sol.objective, tol);
  return checker.run();
}

// Two-group variant of the optimality certificate.
inline std::vector<KktViolation> verify_kkt(const CiProblem& p,
                                            const CiSolution& sol,
                                            double tol = kTol) {
  p.validate();
  const int nd = p.instance.n_d, ns = p.instance.n_s;
  Vec values(static_cast<std::size_t>(2 * nd) * ns);
  const Vec treated = discounted_weights(p.instance, p.cost_model);
  Vec flow(static_cast<std::size_t>(2 * nd) * ns);
  for (int i = 0; i < nd; ++i)
    for (int j = 0; j < ns; ++j) {
      values[static_cast<std::size_t>(i) * ns + j] = p.instance.value(i, j);
      values[static_cast<std::size_t>(nd + i) * ns + j] =
          treated[static_cast<std::size_t>(i) * ns + j];
      flow[static_cast<std::size_t>(i) * ns + j] =
          sol.flow_con[static_cast<std::size_t>(i) * ns + j];
      flow[static_cast<std::size_t>(nd + i) * ns + j] =
          sol.flow_tre[static_cast<std::size_t>(i) * ns + j];
    }
  Vec caps(2 * static_cast<std::size_t>(nd));
  Vec row_dual(2 * static_cast<std::size_t>(nd));
  for (int i = 0; i < nd; ++i) {
    caps[i] = p.d_con[i];
    caps[nd + i] = p.d_tre[i];
    row_dual[i] = sol.demand_dual_con[i];
    row_dual[nd + i] = sol.demand_dual_tre[i];
  }
  detail::KktChecker checker(2 * nd, ns, values, caps, p.s, flow, row_dual,
                             sol.supply_dual, sol.objective, tol);
  return checker.run();
}

}  // namespace matchlab
