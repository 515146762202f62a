#pragma once

#include <string>
#include <vector>

#include "mvmdp/mdp.hpp"
#include "mvmdp/oracle.hpp"

namespace mvmdp {

struct IdentityResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  /// Reported only; does not count toward the suite verdict.
  bool informational = false;
  std::string detail;
};

/// xi of the affine blend (1 - delta) d + delta d' for any real delta.
double xi_along_blend(const Mdp& mdp, const Policy& d, const Policy& d_prime, double delta, double beta);

/**
 * Policy-agnostic identities evaluated at `policy`: pseudo-mean shift,
 * performance difference against direct evaluation (including d' = d),
 * derivative against a central finite difference, Monte-Carlo agreement
 * within 3 standard errors. The local-optimality residual is reported as
 * informational.
 */
std::vector<IdentityResult> run_identity_suite(const Mdp& mdp, const Policy& policy, double beta,
                                               const MonteCarloOptions& mc = {});

bool suite_passed(const std::vector<IdentityResult>& results);

}  // namespace mvmdp
