#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "oqs/common.hpp"
#include "oqs/quadrature.hpp"

namespace oqs {

// Mean occupation of a mode at inverse temperature beta.  beta = inf is the
// vacuum.  Written with expm1 so small beta*Omega stays accurate.
inline double planck_occupation(double Omega, double beta) {
  if (!(Omega > 0.0)) throw ConfigError("planck_occupation requires Omega > 0");
  if (!(beta > 0.0)) throw ConfigError("planck_occupation requires beta > 0");
  if (is_infinite_beta(beta)) return 0.0;
  return 1.0 / std::expm1(beta * Omega);
}

// g(w) = eta * w * exp(-w / cutoff) on w > 0.
struct OhmicExponential {
  double eta = 1.0;
  double cutoff = 1.0;
};

// A finite set of modes; the spectral density is a sum of weight-2*pi*lambda^2
// peaks.  smear_sigma is the Gaussian width used when the spectral density is
// evaluated as a function (plots, frequency reads); correlators use the exact
// sums and never touch it.
struct DiscreteModes {
  std::vector<double> lambda;
  std::vector<double> omega;
  double smear_sigma = 0.0;  // 0 selects 0.02 * max omega

  double sigma() const {
    if (smear_sigma > 0.0) return smear_sigma;
    double m = 0.0;
    for (double w : omega) m = std::max(m, w);
    return 0.02 * m;
  }
};

struct BathSpec {
  std::variant<OhmicExponential, DiscreteModes> model;
  double beta = kInfBeta;

  bool ohmic() const { return std::holds_alternative<OhmicExponential>(model); }
  const OhmicExponential& as_ohmic() const { return std::get<OhmicExponential>(model); }
  const DiscreteModes& as_discrete() const { return std::get<DiscreteModes>(model); }

  void validate() const {
    if (!(beta > 0.0)) throw ConfigError("bath beta must be positive (inf = vacuum)");
    if (ohmic()) {
      const auto& m = as_ohmic();
      if (!(m.eta >= 0.0) || !(m.cutoff > 0.0))
        throw ConfigError("ohmic bath needs eta >= 0 and cutoff > 0");
    } else {
      const auto& m = as_discrete();
      if (m.lambda.empty() || m.lambda.size() != m.omega.size())
        throw ConfigError("discrete bath needs matching lambda/omega lists");
      for (size_t k = 0; k < m.omega.size(); ++k)
        if (!(m.omega[k] > 0.0)) throw ConfigError("discrete mode frequencies must be positive");
    }
  }

  // Largest frequency scale of the model, used for automatic cutoffs.
  double model_scale() const {
    if (ohmic()) return as_ohmic().cutoff;
    double m = 0.0;
    for (double w : as_discrete().omega) m = std::max(m, w);
    return m;
  }
};

// Spectral weight as a function of frequency.  Ohmic: the closed form.
// Discrete: Gaussian-smeared peaks (total weight 2*pi*lambda_k^2 each); the
// smearing exists for evaluation as a function only.
inline double spectral_density(const BathSpec& spec, double w) {
  if (w <= 0.0) return 0.0;
  if (spec.ohmic()) {
    const auto& m = spec.as_ohmic();
    return m.eta * w * std::exp(-w / m.cutoff);
  }
  const auto& m = spec.as_discrete();
  const double s = m.sigma();
  const double norm = 1.0 / (s * std::sqrt(2.0 * M_PI));
  double g = 0.0;
  for (size_t k = 0; k < m.omega.size(); ++k) {
    const double x = (w - m.omega[k]) / s;
    g += 2.0 * M_PI * m.lambda[k] * m.lambda[k] * norm * std::exp(-0.5 * x * x);
  }
  return g;
}

// Integration cutoff for all spectral integrals.  A requested value is
// validated against the documented floor (at least 5x the largest system gap);
// requested = 0 picks the automatic value.
inline double effective_cutoff(const BathSpec& spec, double max_gap, double requested) {
  if (requested > 0.0) {
    if (requested < 5.0 * max_gap)
      throw ConfigError("omega_cutoff must exceed the largest |E_p - E_q| by at least 5x");
    return requested;
  }
  const double model = spec.ohmic() ? 25.0 * spec.as_ohmic().cutoff
                                    : 5.0 * spec.model_scale() + 8.0 * spec.as_discrete().sigma();
  return std::max(model, 10.0 * max_gap);
}

enum class Chan { d11, d12, d21, d22 };

namespace detail {

// x / (exp(beta x) - 1) continued through x = 0.
inline double bose_ratio(double x, double beta) {
  if (is_infinite_beta(beta)) return 0.0;
  const double bx = beta * x;
  if (std::abs(bx) < 1e-8) return (1.0 - 0.5 * bx + bx * bx / 12.0) / beta;
  return x / std::expm1(bx);
}

inline cplx bose_ratio(cplx z, double beta) {
  if (is_infinite_beta(beta)) return 0.0;
  const cplx bz = beta * z;
  if (std::abs(bz) < 1e-8) return (1.0 - 0.5 * bz + bz * bz / 12.0) / beta;
  return z / (std::exp(bz) - 1.0);
}

// sum_{m >= 1} (a + m*beta)^{-2}, tail handled by the midpoint rule with its
// first correction; accuracy ~1e-12 relative independent of a.
inline cplx matsubara_sum(cplx a, double beta) {
  constexpr int kTerms = 256;
  cplx s = 0.0;
  for (int m = 1; m <= kTerms; ++m) {
    const cplx d = a + static_cast<double>(m) * beta;
    s += 1.0 / (d * d);
  }
  const cplx c = a + (kTerms + 0.5) * beta;
  s += 1.0 / (beta * c) - (beta / 12.0) / (c * c * c);
  return s;
}

}  // namespace detail

// Two-time reservoir statistics for one conjugate coupling pair.  Channel 1 is
// the annihilation side, channel 2 the creation side; the only non-vanishing
// second moments are (1,2) and (2,1).  All frequency-domain machinery lives
// here so the kernel assembly can stay model-agnostic:
//   phi(c, v)        spectral weight of channel pair c on v > 0
//   cauchy(c, y, e)  (1/2pi) int phi_c(v) / (y - v + i e) dv, continued to
//                    complex y (retarded branch; second sheet below the cut)
//   cauchy_pv(c, y)  the principal-value analogue on the real axis
class BathCorrelation {
 public:
  BathCorrelation(BathSpec spec, double cutoff, double quad_tol = 1e-11)
      : spec_(std::move(spec)), cutoff_(cutoff), quad_tol_(quad_tol) {
    spec_.validate();
    if (!(cutoff_ > 0.0)) throw ConfigError("integration cutoff must be positive");
    if (!spec_.ohmic()) {
      const auto& m = spec_.as_discrete();
      for (size_t k = 0; k < m.omega.size(); ++k) {
        const double n = is_infinite_beta(spec_.beta)
                             ? 0.0
                             : planck_occupation(m.omega[k], spec_.beta);
        w12_.push_back(m.lambda[k] * m.lambda[k] * (1.0 + n));
        w21_.push_back(m.lambda[k] * m.lambda[k] * n);
      }
    }
  }

  const BathSpec& spec() const { return spec_; }
  double beta() const { return spec_.beta; }
  double cutoff() const { return cutoff_; }
  double quad_tol() const { return quad_tol_; }

  // D^{ab}(t), the two-time average with the channel-a operator at time t and
  // the channel-b operator at time 0.
  cplx time(Chan ab, double t) const {
    if (ab == Chan::d11 || ab == Chan::d22) return 0.0;
    if (!spec_.ohmic()) {
      const auto& m = spec_.as_discrete();
      cplx s = 0.0;
      if (ab == Chan::d12) {
        for (size_t k = 0; k < m.omega.size(); ++k)
          s += w12_[k] * std::exp(cplx(0.0, -m.omega[k] * t));
      } else {
        for (size_t k = 0; k < m.omega.size(); ++k)
          s += w21_[k] * std::exp(cplx(0.0, m.omega[k] * t));
      }
      return s;
    }
    // Exact frequency integrals for the ohmic-exponential model: the vacuum
    // part is rational and the thermal part is a geometric series in the
    // Boltzmann factor, summed mode by mode.
    const auto& m = spec_.as_ohmic();
    const double pref = m.eta / (2.0 * M_PI);
    if (ab == Chan::d12) {
      const cplx a(1.0 / m.cutoff, t);
      cplx v = 1.0 / (a * a);
      if (!is_infinite_beta(spec_.beta)) v += detail::matsubara_sum(a, spec_.beta);
      return pref * v;
    }
    if (is_infinite_beta(spec_.beta)) return 0.0;
    const cplx a(1.0 / m.cutoff, -t);
    return pref * detail::matsubara_sum(a, spec_.beta);
  }

  // Fourier transform of the above with D(t) = int (dw/2pi) e^{-iwt} Dt(w):
  // channel (1,2) is supported on w > 0, channel (2,1) on w < 0; the w = 0
  // value is the one-sided limit (eta/beta for a thermal ohmic bath).
  double freq(Chan ab, double w) const {
    if (ab == Chan::d11 || ab == Chan::d22) return 0.0;
    if (ab == Chan::d12) {
      if (w < 0.0) return 0.0;
      return phi(Chan::d12, w);
    }
    if (w > 0.0) return 0.0;
    return phi(Chan::d21, -w);
  }

  // Spectral weight of channel pair c as a function on v >= 0.  For discrete
  // baths this is the smeared version (occupation factors taken at the mode
  // frequencies); the cauchy/pv reads below use the exact sums instead.
  double phi(Chan c, double v) const {
    if (c == Chan::d11 || c == Chan::d22 || v < 0.0) return 0.0;
    if (spec_.ohmic()) {
      const auto& m = spec_.as_ohmic();
      const double damp = m.eta * std::exp(-v / m.cutoff);
      const double thermal = detail::bose_ratio(v, spec_.beta);
      return c == Chan::d12 ? damp * (v + thermal) : damp * thermal;
    }
    const auto& m = spec_.as_discrete();
    const double s = m.sigma();
    const double norm = 1.0 / (s * std::sqrt(2.0 * M_PI));
    const auto& w = (c == Chan::d12) ? w12_ : w21_;
    double out = 0.0;
    for (size_t k = 0; k < m.omega.size(); ++k) {
      const double x = (v - m.omega[k]) / s;
      out += 2.0 * M_PI * w[k] * norm * std::exp(-0.5 * x * x);
    }
    return out;
  }

  // Analytic continuation of phi, needed when a resonance search drags a pole
  // through the positive-frequency cut.
  cplx phi_analytic(Chan c, cplx z) const {
    if (c == Chan::d11 || c == Chan::d22) return 0.0;
    if (!spec_.ohmic())
      throw NumericError("discrete baths have no continued spectral function");
    const auto& m = spec_.as_ohmic();
    const cplx damp = m.eta * std::exp(-z / m.cutoff);
    const cplx thermal = detail::bose_ratio(z, spec_.beta);
    return c == Chan::d12 ? damp * (z + thermal) : damp * thermal;
  }

  // (1/2pi) int_0^cutoff phi_c(v) / (y - v + i eps) dv.  Real y with eps > 0
  // is the regulated integral; real y with eps = 0 is the limit from the side
  // selected by from_above (principal value -/+ i/2 times the on-shell
  // weight); complex y is the analytic continuation from that side, picking
  // up the discontinuity when it crosses the positive-frequency cut.
  cplx cauchy(Chan c, cplx y, double eps, bool from_above = true) const {
    if (c == Chan::d11 || c == Chan::d22) return 0.0;
    if (!spec_.ohmic()) {
      const auto& m = spec_.as_discrete();
      const auto& w = (c == Chan::d12) ? w12_ : w21_;
      cplx s = 0.0;
      for (size_t k = 0; k < m.omega.size(); ++k) s += w[k] / (y - m.omega[k] + cplx(0.0, eps));
      return s;
    }
    auto ph = [&](double v) { return phi(c, v); };
    const double pref = 1.0 / (2.0 * M_PI);
    if (std::imag(y) == 0.0) {
      const double yr = std::real(y);
      if (eps > 0.0) return pref * cauchy_ieps(ph, yr, eps, 0.0, cutoff_, quad_tol_);
      cplx out = pref * pv_cauchy(ph, yr, 0.0, cutoff_, pv_delta_for(yr), quad_tol_);
      if (yr > 0.0 && yr < cutoff_)
        out += cplx(0.0, from_above ? -0.5 : 0.5) * phi(c, yr);
      return out;
    }
    cplx out = pref * cauchy_complex(ph, y, 0.0, cutoff_, quad_tol_);
    const bool crossed = from_above ? std::imag(y) < 0.0 : std::imag(y) > 0.0;
    if (crossed && std::real(y) > 0.0 && std::real(y) < cutoff_)
      out += (from_above ? cplx(0.0, -1.0) : cplx(0.0, 1.0)) * phi_analytic(c, y);
    return out;
  }

  // (1/2pi) P int_0^cutoff phi_c(v) / (y - v) dv.
  double cauchy_pv(Chan c, double y, double delta) const {
    if (c == Chan::d11 || c == Chan::d22) return 0.0;
    if (!spec_.ohmic()) {
      const auto& m = spec_.as_discrete();
      const auto& w = (c == Chan::d12) ? w12_ : w21_;
      double s = 0.0;
      for (size_t k = 0; k < m.omega.size(); ++k) {
        const double den = y - m.omega[k];
        if (std::abs(den) < 1e-12 * std::max(1.0, std::abs(y)))
          throw NumericError("principal-value pole coincides with a discrete mode");
        s += w[k] / den;
      }
      return s;
    }
    auto ph = [&](double v) { return phi(c, v); };
    return pv_cauchy(ph, y, 0.0, cutoff_, delta, quad_tol_) / (2.0 * M_PI);
  }

  void set_pv_delta(double d) { pv_delta_ = d; }

 private:
  double pv_delta_for(double y) const { return pv_delta_ * std::max(1.0, std::abs(y)); }

  BathSpec spec_;
  double cutoff_;
  double quad_tol_;
  double pv_delta_ = 1e-3;
  std::vector<double> w12_, w21_;
};

// Convenience, spec-facing wrappers keyed by explicit channel indices 1/2.
inline Chan channel_pair(int a, int b) {
  if (a == 1 && b == 2) return Chan::d12;
  if (a == 2 && b == 1) return Chan::d21;
  if (a == 1 && b == 1) return Chan::d11;
  if (a == 2 && b == 2) return Chan::d22;
  throw ConfigError("bath channel indices must be 1 or 2");
}

inline cplx bath_correlation_time(const BathCorrelation& corr, int a, int b, double t) {
  return corr.time(channel_pair(a, b), t);
}

inline double bath_correlation_freq(const BathCorrelation& corr, int a, int b, double w) {
  return corr.freq(channel_pair(a, b), w);
}

}  // namespace oqs
