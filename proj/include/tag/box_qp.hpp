#pragma once

#include <vector>

#include <Eigen/Dense>

namespace tag {

enum class Bound : signed char { Free = 0, Lower = -1, Upper = 1 };

struct BoxQpResult {
  Eigen::VectorXd x;
  std::vector<Bound> active;
  int iterations = 0;
};

/// Primal active-set method for min 1/2 x'Hx - g'x subject to lo <= x <= hi,
/// H symmetric positive definite. `start` must be feasible; `working` lists
/// the bounds initially held active (empty = none). The minimizer is unique,
/// so the result does not depend on the starting point.
BoxQpResult solve_box_qp(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& linear, double lo, double hi,
                         Eigen::VectorXd start, std::vector<Bound> working = {});

/// Infinity norm of the projected gradient of the objective at x.
double projected_gradient_norm(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& linear, double lo, double hi,
                               const Eigen::VectorXd& x);

}  // namespace tag
