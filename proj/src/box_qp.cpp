#include "tag/box_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tag/error.hpp"

namespace tag {

BoxQpResult solve_box_qp(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& linear, double lo, double hi,
                         Eigen::VectorXd start, std::vector<Bound> working) {
  const Eigen::Index n = linear.size();
  if (hessian.rows() != n || hessian.cols() != n || start.size() != n)
    throw invalid_argument("box QP dimensions disagree");
  if (working.empty()) working.assign(static_cast<std::size_t>(n), Bound::Free);

  BoxQpResult res;
  res.x = std::move(start);
  res.active = std::move(working);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (res.x[i] < lo || res.x[i] > hi) throw invalid_argument("box QP start is infeasible");
    if (res.active[i] == Bound::Lower) res.x[i] = lo;
    if (res.active[i] == Bound::Upper) res.x[i] = hi;
  }

  const double mult_tol = 1e-12 * (hessian.cwiseAbs().maxCoeff() + linear.cwiseAbs().maxCoeff());
  const int max_iter = 20 * static_cast<int>(n) + 50;

  std::vector<Eigen::Index> free_idx;
  Eigen::MatrixXd h_ff;
  Eigen::VectorXd rhs, step;
  for (res.iterations = 1; res.iterations <= max_iter; ++res.iterations) {
    free_idx.clear();
    for (Eigen::Index i = 0; i < n; ++i)
      if (res.active[i] == Bound::Free) free_idx.push_back(i);
    const auto nf = static_cast<Eigen::Index>(free_idx.size());

    // Newton step to the minimizer on the current face.
    step.setZero(n);
    if (nf > 0) {
      const Eigen::VectorXd grad = hessian * res.x - linear;
      h_ff.resize(nf, nf);
      rhs.resize(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        rhs[a] = -grad[free_idx[a]];
        for (Eigen::Index b = 0; b < nf; ++b) h_ff(a, b) = hessian(free_idx[a], free_idx[b]);
      }
      const Eigen::VectorXd p = h_ff.llt().solve(rhs);
      for (Eigen::Index a = 0; a < nf; ++a) step[free_idx[a]] = p[a];
    }

    double alpha = 1.0;
    Eigen::Index blocking = -1;
    Bound blocking_side = Bound::Free;
    for (Eigen::Index i : free_idx) {
      if (step[i] < 0.0 && res.x[i] + step[i] < lo) {
        const double a = (lo - res.x[i]) / step[i];
        if (a < alpha) {
          alpha = a;
          blocking = i;
          blocking_side = Bound::Lower;
        }
      } else if (step[i] > 0.0 && res.x[i] + step[i] > hi) {
        const double a = (hi - res.x[i]) / step[i];
        if (a < alpha) {
          alpha = a;
          blocking = i;
          blocking_side = Bound::Upper;
        }
      }
    }

    if (blocking >= 0) {
      res.x += std::max(alpha, 0.0) * step;
      res.active[blocking] = blocking_side;
      for (Eigen::Index i = 0; i < n; ++i) res.x[i] = std::clamp(res.x[i], lo, hi);
      res.x[blocking] = blocking_side == Bound::Lower ? lo : hi;
      continue;
    }

    // Face minimizer is feasible; release the bound with the most negative multiplier.
    res.x += step;
    const Eigen::VectorXd grad = hessian * res.x - linear;
    Eigen::Index worst = -1;
    double worst_val = -mult_tol;
    for (Eigen::Index i = 0; i < n; ++i) {
      double mu = 0.0;
      if (res.active[i] == Bound::Lower) mu = grad[i];
      else if (res.active[i] == Bound::Upper) mu = -grad[i];
      else continue;
      if (mu < worst_val) {
        worst_val = mu;
        worst = i;
      }
    }
    if (worst < 0) return res;
    res.active[worst] = Bound::Free;
  }
  throw numerical_error("box-constrained QP did not converge");
}

double projected_gradient_norm(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& linear, double lo, double hi,
                               const Eigen::VectorXd& x) {
  const Eigen::VectorXd grad = hessian * x - linear;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double g = grad[i];
    if (x[i] <= lo) g = std::min(g, 0.0);
    if (x[i] >= hi) g = std::max(g, 0.0);
    worst = std::max(worst, std::abs(g));
  }
  return worst;
}

}  // namespace tag
