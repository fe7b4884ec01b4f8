#include "numerics.hpp"

#include <cmath>
#include <sstream>

#include "core.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace gbv {

namespace {

double eval_checked(const ScalarField& f, const Vec& theta) {
  const double v = f(theta);
  if (std::isnan(v)) {
    std::ostringstream os;
    os << "function value is NaN at theta = [";
    for (int j = 0; j < theta.size(); ++j) os << (j ? ", " : "") << theta(j);
    os << "]";
    throw EvaluationError(os.str());
  }
  return v;
}

Vec uniform_in_box(const DomainBox& box, Rng& rng, double inset = 0.0) {
  Vec p(box.dim());
  for (int j = 0; j < box.dim(); ++j) {
    p(j) = rng.uniform(box.lower(j) + inset, box.upper(j) - inset);
  }
  return p;
}

}  // namespace

Vec scaled_steps(const Vec& theta, double base) {
  Vec h(theta.size());
  for (int j = 0; j < theta.size(); ++j) h(j) = base * std::max(1.0, std::abs(theta(j)));
  return h;
}

Vec central_gradient(const ScalarField& f, const Vec& theta, double h) {
  return central_gradient(f, theta, Vec::Constant(theta.size(), h));
}

Vec central_gradient(const ScalarField& f, const Vec& theta, const Vec& h) {
  if ((h.array() <= 0.0).any()) throw ArgumentError("central_gradient: h must be > 0");
  Vec g(theta.size());
  Vec t = theta;
  for (int j = 0; j < theta.size(); ++j) {
    t(j) = theta(j) + h(j);
    const double fp = eval_checked(f, t);
    t(j) = theta(j) - h(j);
    const double fm = eval_checked(f, t);
    t(j) = theta(j);
    g(j) = (fp - fm) / (2.0 * h(j));
  }
  return g;
}

Mat central_hessian(const ScalarField& f, const Vec& theta, double h) {
  return central_hessian(f, theta, Vec::Constant(theta.size(), h));
}

Mat central_hessian(const ScalarField& f, const Vec& theta, const Vec& h) {
  if ((h.array() <= 0.0).any()) throw ArgumentError("central_hessian: h must be > 0");
  const int d = static_cast<int>(theta.size());
  Mat H(d, d);
  const double f0 = eval_checked(f, theta);
  Vec t = theta;
  for (int i = 0; i < d; ++i) {
    t(i) = theta(i) + h(i);
    const double fp = eval_checked(f, t);
    t(i) = theta(i) - h(i);
    const double fm = eval_checked(f, t);
    t(i) = theta(i);
    H(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));
  }
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      t(i) = theta(i) + h(i);
      t(j) = theta(j) + h(j);
      const double fpp = eval_checked(f, t);
      t(j) = theta(j) - h(j);
      const double fpm = eval_checked(f, t);
      t(i) = theta(i) - h(i);
      const double fmm = eval_checked(f, t);
      t(j) = theta(j) + h(j);
      const double fmp = eval_checked(f, t);
      t(i) = theta(i);
      t(j) = theta(j);
      const double mixed = (fpp - fpm - fmp + fmm) / (4.0 * h(i) * h(j));
      H(i, j) = mixed;
      H(j, i) = mixed;
    }
  }
  return H;
}

std::vector<double> central_third_tensor(const ScalarField& f, const Vec& theta, double h) {
  if (h <= 0.0) throw ArgumentError("central_third_tensor: h must be > 0");
  const int d = static_cast<int>(theta.size());
  std::vector<double> T(static_cast<size_t>(d) * d * d, 0.0);
  Vec t(d);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      for (int k = j; k < d; ++k) {
        double acc = 0.0;
        for (int s1 = -1; s1 <= 1; s1 += 2) {
          for (int s2 = -1; s2 <= 1; s2 += 2) {
            for (int s3 = -1; s3 <= 1; s3 += 2) {
              t = theta;
              t(i) += s1 * h;
              t(j) += s2 * h;
              t(k) += s3 * h;
              acc += s1 * s2 * s3 * eval_checked(f, t);
            }
          }
        }
        const double v = acc / (8.0 * h * h * h);
        // symmetric fill over all permutations of (i,j,k)
        const int idx[6][3] = {{i, j, k}, {i, k, j}, {j, i, k}, {j, k, i}, {k, i, j}, {k, j, i}};
        for (const auto& p : idx) T[static_cast<size_t>(p[0]) * d * d + p[1] * d + p[2]] = v;
      }
    }
  }
  return T;
}

double tensor_frobenius(const std::vector<double>& t) {
  double s = 0.0;
  for (double v : t) s += v * v;
  return std::sqrt(s);
}

namespace {

// Shrink the step until theta + t*p stays strictly inside the open box.
double shrink_into_domain(const DomainBox& box, const Vec& theta, const Vec& p, double t) {
  Vec candidate = theta + t * p;
  int guard = 0;
  while (!box.contains(candidate) && guard++ < 80) {
    t *= 0.5;
    candidate = theta + t * p;
  }
  return box.contains(candidate) ? t : 0.0;
}

}  // namespace

FitResult find_minimizer(const ObjectiveModel& m, const Vec& theta_init, double tol, long max_iter) {
  if (tol <= 0.0) throw ArgumentError("find_minimizer: tol must be > 0");
  m.check_theta(theta_init);
  if (!m.domain().contains(theta_init))
    throw ArgumentError("find_minimizer: theta_init outside the model domain");

  constexpr double kArmijo = 1e-4;
  constexpr double kDivergenceNorm = 1e6;

  FitResult out;
  Vec x = theta_init;
  double fx = m.value(x);
  if (std::isnan(fx)) throw EvaluationError("find_minimizer: NaN objective at theta_init");
  out.trace_f.push_back(fx);

  // A small gradient alone does not certify a minimum: on flat escape paths
  // (separable logistic data) the gradient vanishes while the iterates keep
  // marching. Require the damped Newton step to have settled as well.
  auto settled = [&m, tol](const Vec& at, const Vec& grad) {
    const auto chol = cholesky_lower(m.hessian(at));
    if (!chol) return false;
    const Vec p = chol->transpose().triangularView<Eigen::Upper>().solve(
        chol->triangularView<Eigen::Lower>().solve(grad));
    return p.allFinite() && p.norm() <= std::sqrt(tol) * std::max(1.0, at.norm());
  };

  for (long iter = 0; iter < max_iter; ++iter) {
    const Vec g = m.gradient(x);
    const double gnorm = g.norm();
    if (std::isnan(gnorm)) throw EvaluationError("find_minimizer: NaN gradient");
    out.iterations = iter;
    if (gnorm <= tol && settled(x, g)) {
      out.converged = true;
      break;
    }

    Vec p;
    bool newton_dir = false;
    const Mat H = m.hessian(x);
    if (auto chol = cholesky_lower(H)) {
      p = -chol->transpose().triangularView<Eigen::Upper>().solve(
          chol->triangularView<Eigen::Lower>().solve(g));
      newton_dir = g.dot(p) < 0.0;
    }
    if (!newton_dir) p = -g;  // non-PD Hessian: plain gradient step

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const double slope = g.dot(p);
      double t = shrink_into_domain(m.domain(), x, p, 1.0);
      int halvings = 0;
      while (t > 0.0 && halvings < 60) {
        const Vec cand = x + t * p;
        const double fc = m.value(cand);
        if (std::isnan(fc)) throw EvaluationError("find_minimizer: NaN objective in line search");
        if (fc <= fx + kArmijo * t * slope) {
          x = cand;
          fx = fc;
          accepted = true;
          break;
        }
        t *= 0.5;
        ++halvings;
      }
      if (!accepted && newton_dir) {
        p = -g;  // retry once along the gradient
        newton_dir = false;
      } else {
        break;
      }
    }
    if (!accepted) break;  // no usable step at this tolerance
    const bool progressed = fx < out.trace_f.back();
    out.trace_f.push_back(fx);
    if (x.norm() > kDivergenceNorm) {
      out.diverged = true;
      break;
    }
    out.iterations = iter + 1;
    if (!progressed) break;  // objective at its double-precision floor
  }

  out.theta_n = x;
  out.f_min = fx;
  const Vec g_final = m.gradient(x);
  out.grad_norm = g_final.norm();
  out.converged = out.converged || (out.grad_norm <= tol && settled(x, g_final));
  if (out.diverged) out.converged = false;
  out.hessian_at_min = m.hessian(x);
  out.hessian_at_min = 0.5 * (out.hessian_at_min + out.hessian_at_min.transpose());
  return out;
}

double convexity_probe(const ObjectiveModel& m, const DomainBox& box, long n_probe, uint64_t seed) {
  if (n_probe < 1) throw ArgumentError("convexity_probe: n_probe must be >= 1");
  if (!box.bounded()) throw ArgumentError("convexity_probe: box must be bounded");
  Rng rng(seed, 0x11);
  double min_eig = kPosInf;
  for (long i = 0; i < n_probe; ++i) {
    const Vec p = uniform_in_box(box, rng);
    min_eig = std::min(min_eig, min_eigenvalue(m.hessian(p)));
  }
  return min_eig;
}

ThirdBound third_derivative_bound_probe(const ObjectiveModel& m, const DomainBox& box, long n_probe,
                                        double h, uint64_t seed) {
  if (!box.bounded()) throw ArgumentError("third_derivative_bound_probe: box must be bounded");
  if (n_probe < 1) throw ArgumentError("third_derivative_bound_probe: n_probe must be >= 1");
  if (h <= 0.0) throw ArgumentError("third_derivative_bound_probe: h must be > 0");
  for (int j = 0; j < box.dim(); ++j) {
    if (box.upper(j) - box.lower(j) <= 6.0 * h)
      throw ArgumentError("third_derivative_bound_probe: box too narrow for the stencil");
  }

  Rng rng(seed, 0x12);
  auto f = [&m](const Vec& t) { return m.value(t); };
  double probed = 0.0;
  for (long i = 0; i < n_probe; ++i) {
    const Vec p = uniform_in_box(box, rng, 3.0 * h);
    probed = std::max(probed, tensor_frobenius(central_third_tensor(f, p, h)));
  }

  ThirdBound out;
  const auto analytic = m.third_deriv_bound(box);
  if (analytic && *analytic <= probed) {
    out.bound = *analytic;
    out.from_analytic = true;
  } else {
    out.bound = probed;
    out.from_analytic = false;
  }
  return out;
}

AuditReport bvm_audit(const ObjectiveModel& m, const FitResult& fit, const DomainBox& E,
                      long n_convexity_probes, long n_third_probes, double third_h, uint64_t seed) {
  AuditReport report;
  report.fit_converged = fit.converged;
  if (!fit.converged) return report;  // refuse: nothing meaningful at a non-critical point

  report.grad_residual_at_thetan = fit.grad_norm;
  report.min_eigenvalue_H0 = min_eigenvalue(fit.hessian_at_min);
  report.convexity_min_eig_over_probes = convexity_probe(m, E, n_convexity_probes, seed);
  const ThirdBound tb = third_derivative_bound_probe(m, E, n_third_probes, third_h, seed);
  report.third_bound_estimate = tb.bound;
  report.third_from_analytic = tb.from_analytic;

  report.pd_pass = report.min_eigenvalue_H0 > 1e-8;
  report.convexity_pass = report.convexity_min_eig_over_probes >= -1e-8;
  report.third_bound_pass = std::isfinite(report.third_bound_estimate);
  report.stationary_pass = fit.converged;
  report.overall_pass =
      report.pd_pass && report.convexity_pass && report.third_bound_pass && report.stationary_pass;
  return report;
}

}  // namespace gbv
