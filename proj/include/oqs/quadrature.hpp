#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "oqs/common.hpp"

namespace oqs {

// Adaptive Gauss-Kronrod on a finite interval.  Throws when the reported
// error estimate fails both the absolute and the relative bound; tol is
// interpreted relative to max(1, |result|).
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-11) {
  if (a == b) return 0.0;
  double err = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, 15, tol, &err);
  if (err > 100.0 * tol * std::max(1.0, std::abs(value)))
    throw NumericError("quadrature did not converge on [" + std::to_string(a) + ", " +
                       std::to_string(b) + "]");
  return value;
}

namespace detail {

// Interval breakpoints refined geometrically around each feature point, so a
// piece never contains structure much finer than its own width and the
// adaptive depth stays bounded.  A feature inside the interval also becomes a
// breakpoint itself, keeping pieces single-signed across it.
inline std::vector<double> pieces(double a, double b,
                                  std::initializer_list<std::pair<double, double>> features) {
  std::vector<double> pts{a, b};
  for (const auto& [y, w0] : features) {
    if (y > a && y < b) pts.push_back(y);
    if (w0 > 0.0) {
      for (double w = w0;; w *= 10.0) {
        if (y - w > a && y - w < b) pts.push_back(y - w);
        if (y + w > a && y + w < b) pts.push_back(y + w);
        if (y - w <= a && y + w >= b) break;
      }
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

inline double integrate_pieces(const std::function<double(double)>& f,
                               const std::vector<double>& pts, double tol) {
  double s = 0.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) s += integrate(f, pts[i], pts[i + 1], tol);
  return s;
}

inline cplx integrate_pieces_c(const std::function<cplx(double)>& f,
                               const std::vector<double>& pts, double tol) {
  const double re =
      integrate_pieces([&](double x) { return std::real(f(x)); }, pts, tol);
  const double im =
      integrate_pieces([&](double x) { return std::imag(f(x)); }, pts, tol);
  return {re, im};
}

// Slope of phi at y from a central difference clamped to [a, b].  Used only
// to flatten the integrand; the same number is added back analytically, so
// its truncation error cancels exactly.
inline double local_slope(const std::function<double(double)>& phi, double y, double a,
                          double b) {
  const double h = 1e-5 * std::max(1.0, std::abs(y));
  const double lo = std::max(a, y - h);
  const double hi = std::min(b, y + h);
  if (!(hi > lo)) return 0.0;
  return (phi(hi) - phi(lo)) / (hi - lo);
}

}  // namespace detail

inline cplx integrate_c(const std::function<cplx(double)>& f, double a, double b,
                        double tol = 1e-11) {
  const double re = integrate([&](double x) { return std::real(f(x)); }, a, b, tol);
  const double im = integrate([&](double x) { return std::imag(f(x)); }, a, b, tol);
  return {re, im};
}

// P int_a^b phi(v)/(y - v) dv with the pole excluded by a symmetric window of
// half-width delta and the window bias removed by linear extrapolation over
// the two window sizes delta and 2*delta:  PV ~ 2 I(delta) - I(2 delta).
// origin_scale > 0 declares additional integrand structure of that width at
// the left endpoint (an occupation factor turning on, for instance).
inline double pv_cauchy(const std::function<double(double)>& phi, double y, double a,
                        double b, double delta, double tol = 1e-11,
                        double origin_scale = 0.0) {
  auto integrand = [&](double v) { return phi(v) / (y - v); };
  if (y <= a || y >= b) {
    const double edge = std::max(std::min(std::abs(y - a), std::abs(y - b)), 1e-9 * (b - a));
    const auto pts = detail::pieces(a, b, {{y, edge}, {a, origin_scale}});
    return detail::integrate_pieces(integrand, pts, tol);
  }

  // keep both windows inside the interval
  const double room = std::min(y - a, b - y);
  double d1 = delta;
  if (2.0 * d1 >= room) d1 = 0.25 * room;
  if (!(d1 > 0.0)) throw NumericError("principal-value pole too close to an endpoint");

  auto excluded = [&](double d) {
    const auto pts = detail::pieces(a, b, {{y, d}, {a, origin_scale}});
    double s = 0.0;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
      const double mid = 0.5 * (pts[i] + pts[i + 1]);
      if (std::abs(mid - y) < 0.999 * d) continue;  // inside the exclusion window
      s += integrate(integrand, pts[i], pts[i + 1], tol);
    }
    return s;
  };
  const double i1 = excluded(d1);
  const double i2 = excluded(2.0 * d1);
  return 2.0 * i1 - i2;
}

// int_a^b phi(v)/(y - v + i eps) dv for real y inside or outside [a, b].
// The pole's constant and linear response are removed analytically,
//   int (py + dpy (v-y)) / (y - v + ie) dv = py L1 + dpy (iε L1 - (b-a)),
// leaving a remainder with no structure on the scale eps; a pessimistic
// error estimate chasing the eps-wide Lorentzian is what this avoids.
inline cplx cauchy_ieps(const std::function<double(double)>& phi, double y, double eps,
                        double a, double b, double tol = 1e-11, double origin_scale = 0.0) {
  const cplx ie(0.0, eps);
  if (y > a && y < b) {
    const double py = phi(y);
    const double dpy = detail::local_slope(phi, y, a, b);
    auto rest = [&](double v) -> cplx {
      return (phi(v) - py - dpy * (v - y)) / (y - v + ie);
    };
    const auto pts = detail::pieces(a, b, {{y, 0.0}, {a, origin_scale}});
    const cplx tail = detail::integrate_pieces_c(rest, pts, tol);
    const cplx l1 = std::log((y - a + ie) / (y - b + ie));
    const cplx l2 = ie * l1 - (b - a);
    return tail + py * l1 + dpy * l2;
  }
  auto plain = [&](double v) -> cplx { return phi(v) / (y - v + ie); };
  const double edge = std::max({100.0 * eps, std::min(std::abs(y - a), std::abs(y - b)),
                                1e-9 * (b - a)});
  const auto pts = detail::pieces(a, b, {{y, edge}, {a, origin_scale}});
  return detail::integrate_pieces_c(plain, pts, tol);
}

// int_a^b phi(v)/(y - v) dv for complex y off the real axis, same linear
// flattening anchored at Re y.
inline cplx cauchy_complex(const std::function<double(double)>& phi, cplx y, double a,
                           double b, double tol = 1e-11, double origin_scale = 0.0) {
  const double yr = std::real(y);
  if (std::imag(y) == 0.0) return cauchy_ieps(phi, yr, 0.0, a, b, tol, origin_scale);
  if (yr > a && yr < b) {
    const double py = phi(yr);
    const double dpy = detail::local_slope(phi, yr, a, b);
    auto rest = [&](double v) -> cplx {
      return (phi(v) - py - dpy * (v - yr)) / (y - v);
    };
    const auto pts = detail::pieces(a, b, {{yr, 0.0}, {a, origin_scale}});
    const cplx tail = detail::integrate_pieces_c(rest, pts, tol);
    const cplx l1 = std::log((y - a) / (y - b));
    const cplx l2 = cplx(0.0, std::imag(y)) * l1 - (b - a);
    return tail + py * l1 + dpy * l2;
  }
  auto plain = [&](double v) -> cplx { return phi(v) / (y - v); };
  const double edge = std::max({std::abs(std::imag(y)),
                                std::min(std::abs(yr - a), std::abs(yr - b)),
                                1e-9 * (b - a)});
  const auto pts = detail::pieces(a, b, {{yr, edge}, {a, origin_scale}});
  return detail::integrate_pieces_c(plain, pts, tol);
}

}  // namespace oqs
