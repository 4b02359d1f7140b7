#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "becaptcha/errors.hpp"
#include "becaptcha/matrix.hpp"
#include "becaptcha/rng.hpp"

namespace becaptcha {

inline double rbf_kernel(const Vec& a, const Vec& b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

// Soft-margin binary SVM dual solved with sequential minimal optimization.
// Decision value f(x) = sum_i coef_i K(sv_i, x) + bias with coef_i = alpha_i y_i.
struct SvmDual {
  std::vector<Vec> support_vectors;
  Vec coefficients;
  double bias = 0.0;
  double gamma = 1.0;

  double decision_value(const Vec& x) const {
    double f = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i)
      f += coefficients[i] * rbf_kernel(support_vectors[i], x, gamma);
    return f;
  }
};

namespace smo_detail {

// Platt-style SMO with a full error cache. Desk-scale training sets, so
// kernel values are computed on demand.
class BinarySmoSolver {
 public:
  BinarySmoSolver(const std::vector<Vec>& x, const std::vector<int>& y, double c, double gamma,
                  double tol, std::size_t max_passes, std::uint64_t seed)
      : x_(x), y_(y), c_(c), gamma_(gamma), tol_(tol), max_passes_(max_passes), rng_(seed) {
    const std::size_t n = x_.size();
    alpha_.assign(n, 0.0);
    error_.resize(n);
    for (std::size_t i = 0; i < n; ++i) error_[i] = -static_cast<double>(y_[i]);
  }

  void solve() {
    std::size_t num_changed = 0;
    bool examine_all = true;
    std::size_t passes = 0;
    while (num_changed > 0 || examine_all) {
      if (++passes > max_passes_)
        throw Error(ErrorKind::SmoNonConvergence,
                    "SMO exceeded " + std::to_string(max_passes_) + " passes (n=" +
                        std::to_string(x_.size()) + ", last pass changed " +
                        std::to_string(num_changed) + " multipliers)");
      num_changed = 0;
      if (examine_all) {
        for (std::size_t i = 0; i < x_.size(); ++i) num_changed += examine(i);
      } else {
        for (std::size_t i = 0; i < x_.size(); ++i)
          if (alpha_[i] > 0.0 && alpha_[i] < c_) num_changed += examine(i);
      }
      if (examine_all)
        examine_all = false;
      else if (num_changed == 0)
        examine_all = true;
    }
  }

  const Vec& alphas() const { return alpha_; }
  double bias() const { return b_; }

 private:
  double kernel(std::size_t i, std::size_t j) const { return rbf_kernel(x_[i], x_[j], gamma_); }

  bool take_step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    const double a1_old = alpha_[i1];
    const double a2_old = alpha_[i2];
    const int y1 = y_[i1], y2 = y_[i2];
    const double e1 = error_[i1], e2 = error_[i2];
    const double s = static_cast<double>(y1 * y2);

    double lo, hi;
    if (y1 != y2) {
      lo = std::max(0.0, a2_old - a1_old);
      hi = std::min(c_, c_ + a2_old - a1_old);
    } else {
      lo = std::max(0.0, a1_old + a2_old - c_);
      hi = std::min(c_, a1_old + a2_old);
    }
    if (lo >= hi) return false;

    const double k11 = kernel(i1, i1);
    const double k12 = kernel(i1, i2);
    const double k22 = kernel(i2, i2);
    const double eta = k11 + k22 - 2.0 * k12;

    double a2;
    if (eta > 0.0) {
      a2 = a2_old + y2 * (e1 - e2) / eta;
      a2 = std::clamp(a2, lo, hi);
    } else {
      // flat direction (duplicate points): evaluate the objective at the ends
      const double f1 = y1 * (e1 + b_) - a1_old * k11 - s * a2_old * k12;
      const double f2 = y2 * (e2 + b_) - s * a1_old * k12 - a2_old * k22;
      const double l1 = a1_old + s * (a2_old - lo);
      const double h1 = a1_old + s * (a2_old - hi);
      const double lo_obj = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                            s * lo * l1 * k12;
      const double hi_obj = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                            s * hi * h1 * k12;
      if (lo_obj < hi_obj - 1e-12)
        a2 = lo;
      else if (lo_obj > hi_obj + 1e-12)
        a2 = hi;
      else
        return false;
    }
    if (std::abs(a2 - a2_old) < 1e-12 * (a2 + a2_old + 1e-12)) return false;

    const double a1 = a1_old + s * (a2_old - a2);
    const double d1 = y1 * (a1 - a1_old);
    const double d2 = y2 * (a2 - a2_old);

    const double b1 = b_ - e1 - d1 * k11 - d2 * k12;
    const double b2 = b_ - e2 - d1 * k12 - d2 * k22;
    const double b_old = b_;
    if (a1 > 0.0 && a1 < c_)
      b_ = b1;
    else if (a2 > 0.0 && a2 < c_)
      b_ = b2;
    else
      b_ = 0.5 * (b1 + b2);

    alpha_[i1] = a1;
    alpha_[i2] = a2;
    const double db = b_ - b_old;
    for (std::size_t k = 0; k < x_.size(); ++k)
      error_[k] += d1 * kernel(i1, k) + d2 * kernel(i2, k) + db;
    return true;
  }

  bool examine(std::size_t i2) {
    const int y2 = y_[i2];
    const double a2 = alpha_[i2];
    const double e2 = error_[i2];
    const double r2 = e2 * y2;
    if (!((r2 < -tol_ && a2 < c_) || (r2 > tol_ && a2 > 0.0))) return false;

    // second-choice heuristic: largest |E1 - E2| among non-bound multipliers
    std::size_t best = i2;
    double best_gap = -1.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (alpha_[i] <= 0.0 || alpha_[i] >= c_) continue;
      const double gap = std::abs(error_[i] - e2);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best != i2 && take_step(best, i2)) return true;

    const std::size_t n = x_.size();
    std::size_t start = rng_.uniform_index(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (start + k) % n;
      if (alpha_[i] > 0.0 && alpha_[i] < c_ && take_step(i, i2)) return true;
    }
    start = rng_.uniform_index(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (start + k) % n;
      if (take_step(i, i2)) return true;
    }
    return false;
  }

  const std::vector<Vec>& x_;
  const std::vector<int>& y_;
  double c_, gamma_, tol_;
  std::size_t max_passes_;
  Rng rng_;
  Vec alpha_;
  Vec error_;
  double b_ = 0.0;
};

}  // namespace smo_detail

inline SvmDual solve_svm_rbf(const std::vector<Vec>& x, const std::vector<int>& y, double c,
                             double gamma, double tol = 1e-3, std::size_t max_passes = 100000,
                             std::uint64_t seed = 1) {
  smo_detail::BinarySmoSolver solver(x, y, c, gamma, tol, max_passes, seed);
  solver.solve();

  SvmDual dual;
  dual.gamma = gamma;
  dual.bias = solver.bias();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (solver.alphas()[i] > 0.0) {
      dual.support_vectors.push_back(x[i]);
      dual.coefficients.push_back(solver.alphas()[i] * y[i]);
    }
  return dual;
}

// nu-formulation one-class SVM: minimize (1/2) a'Ka subject to 0 <= a_i <= 1
// and sum a = nu*n. Inlier region is {x : g(x) >= rho} with
// g(x) = sum_i a_i K(sv_i, x).
struct OneClassDual {
  std::vector<Vec> support_vectors;
  Vec alphas;
  double rho = 0.0;
  double gamma = 1.0;

  double decision_g(const Vec& x) const {
    double g = 0.0;
    for (std::size_t i = 0; i < support_vectors.size(); ++i)
      g += alphas[i] * rbf_kernel(support_vectors[i], x, gamma);
    return g;
  }

  // > 0 means outside the learned region, i.e. bot-like.
  double anomaly_score(const Vec& x) const { return rho - decision_g(x); }
};

inline OneClassDual solve_one_class_rbf(const std::vector<Vec>& x, double nu, double gamma,
                                        double tol = 1e-3, std::size_t max_iters = 100000) {
  const std::size_t n = x.size();
  if (n == 0) throw Error(ErrorKind::EmptyTrainingSet, "one-class SVM needs training points");
  if (nu <= 0.0 || nu > 1.0) throw Error(ErrorKind::InvalidConfig, "nu must be in (0, 1]");

  Vec alpha(n, 0.0);
  const double target_sum = nu * static_cast<double>(n);
  const std::size_t full = static_cast<std::size_t>(std::floor(target_sum));
  for (std::size_t i = 0; i < full && i < n; ++i) alpha[i] = 1.0;
  if (full < n) alpha[full] = target_sum - static_cast<double>(full);

  // gradient of the objective: G = K alpha
  Vec grad(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double g = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (alpha[j] > 0.0) g += alpha[j] * rbf_kernel(x[i], x[j], gamma);
    grad[i] = g;
  }

  for (std::size_t iter = 0;; ++iter) {
    if (iter >= max_iters)
      throw Error(ErrorKind::SmoNonConvergence,
                  "one-class SMO exceeded " + std::to_string(max_iters) + " iterations");
    // most violating pair: raise alpha where the gradient is lowest,
    // lower it where the gradient is highest
    std::size_t up = n, down = n;
    double g_min = std::numeric_limits<double>::infinity();
    double g_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (alpha[i] < 1.0 && grad[i] < g_min) {
        g_min = grad[i];
        up = i;
      }
      if (alpha[i] > 0.0 && grad[i] > g_max) {
        g_max = grad[i];
        down = i;
      }
    }
    if (up == n || down == n || g_max - g_min <= tol) break;

    const double kuu = rbf_kernel(x[up], x[up], gamma);
    const double kdd = rbf_kernel(x[down], x[down], gamma);
    const double kud = rbf_kernel(x[up], x[down], gamma);
    double denom = kuu + kdd - 2.0 * kud;
    if (denom <= 1e-12) denom = 1e-12;
    double delta = (g_max - g_min) / denom;
    delta = std::min(delta, std::min(1.0 - alpha[up], alpha[down]));
    if (delta <= 0.0) break;

    alpha[up] += delta;
    alpha[down] -= delta;
    for (std::size_t i = 0; i < n; ++i)
      grad[i] += delta * (rbf_kernel(x[i], x[up], gamma) - rbf_kernel(x[i], x[down], gamma));
  }

  // rho from the KKT conditions: free multipliers sit exactly on the boundary
  double rho_sum = 0.0;
  std::size_t rho_count = 0;
  double ub = std::numeric_limits<double>::infinity();   // min grad over alpha = 0
  double lb = -std::numeric_limits<double>::infinity();  // max grad over alpha = 1
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > 0.0 && alpha[i] < 1.0) {
      rho_sum += grad[i];
      ++rho_count;
    } else if (alpha[i] <= 0.0) {
      ub = std::min(ub, grad[i]);
    } else {
      lb = std::max(lb, grad[i]);
    }
  }

  OneClassDual dual;
  dual.gamma = gamma;
  if (rho_count > 0)
    dual.rho = rho_sum / static_cast<double>(rho_count);
  else
    dual.rho = 0.5 * (std::isfinite(lb) ? lb : ub) + 0.5 * (std::isfinite(ub) ? ub : lb);
  for (std::size_t i = 0; i < n; ++i)
    if (alpha[i] > 0.0) {
      dual.support_vectors.push_back(x[i]);
      dual.alphas.push_back(alpha[i]);
    }
  return dual;
}

}  // namespace becaptcha
