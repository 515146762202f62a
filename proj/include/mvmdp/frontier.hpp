#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mvmdp/mdp.hpp"
#include "mvmdp/oracle.hpp"
#include "mvmdp/solvers.hpp"

namespace mvmdp {

enum class PointSource { kSolver, kOracle };
std::string_view to_string(PointSource source);

struct FrontierPoint {
  double beta = 0.0;
  double eta = 0.0;
  double zeta = 0.0;
  double xi = 0.0;  ///< eta - beta zeta
  Policy policy;
  PointSource source = PointSource::kSolver;
  bool is_vertex = false;
  bool ok = true;
  std::string error;  ///< set when the solve for this beta failed
};

/// {0, 0.05, 0.1, 0.2, 0.5, 1, 2, 5, 10}
std::vector<double> default_beta_grid();

struct SweepOptions {
  SolverConfig config;
  /// Use the exact global optimum instead of the bilevel solver.
  bool oracle = false;
  std::size_t cap = kDefaultEnumerationCap;
  bool parallel = true;
  unsigned threads = 0;
};

/**
 * One point per beta, in input order. Failed solves are kept with ok = false.
 * Marks is_vertex on the points that lie on the convex efficient frontier of
 * the successful ones. Throws std::invalid_argument on an empty grid or a
 * negative beta.
 */
std::vector<FrontierPoint> beta_sweep(const Mdp& mdp, const std::vector<double>& betas,
                                      const SweepOptions& options = {});

struct MeanVariance {
  double eta = 0.0;
  double zeta = 0.0;
};

/// Collinearity tolerance on the (zeta, eta) cross product.
inline constexpr double kHullTolerance = 1e-10;

/**
 * Indices of the Pareto-efficient convex hull vertices, ordered by increasing
 * zeta (eta increases too). Collinear and duplicate points are dropped.
 */
std::vector<std::size_t> convex_efficient_frontier(const std::vector<MeanVariance>& points);
std::vector<std::size_t> convex_efficient_frontier(const std::vector<FrontierPoint>& points);

/**
 * Exact frontier vertices of all deterministic policies. Enumerates within
 * `cap`; above it, recurses on beta between the risk-neutral end and a
 * variance-minimizing end (beta = 1e6) using the parametric global optimum,
 * splitting at the beta where two known vertices tie. Each vertex carries a
 * beta at which it is optimal.
 */
std::vector<FrontierPoint> oracle_frontier(const Mdp& mdp, std::size_t cap = kDefaultEnumerationCap);

/// Columns: beta,eta,zeta,xi,policy,source,is_vertex. Failed points are skipped.
void write_frontier_csv(std::ostream& out, const std::vector<FrontierPoint>& points);

/// Columns: zeta,eta,is_vertex
void write_plot_data(std::ostream& out, const std::vector<FrontierPoint>& points);

}  // namespace mvmdp
