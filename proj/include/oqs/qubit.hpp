#pragma once

#include <cmath>

#include "oqs/bath.hpp"
#include "oqs/core.hpp"
#include "oqs/kernel.hpp"

namespace oqs {

// Two-level reduction.  Basis index 0 is the upper level |e>, index 1 the
// lower level |g>.  g0 is the bath spectral density read at the splitting,
// n0 the occupation there.  delta is the coherence frequency shift with the
// convention that the dressed precession frequency is omega0 - delta.
struct QubitParams {
  double omega0 = 1.0;
  double g0 = 0.1;
  double n0 = 0.0;
  double delta = 0.0;
};

inline SystemSpec qubit_system(double omega0) {
  if (!(omega0 > 0.0)) throw ConfigError("qubit splitting must be positive");
  SystemSpec s;
  s.energies = RealVec(2);
  s.energies << 0.5 * omega0, -0.5 * omega0;
  Mat sp = Mat::Zero(2, 2);
  sp(0, 1) = 1.0;
  Mat sm = Mat::Zero(2, 2);
  sm(1, 0) = 1.0;
  s.couplings = {sp, sm};
  s.conjugate_pairs = {1, 0};
  s.validate();
  return s;
}

// Rates and the on-shell kernel matrix elements of the frequency-locked
// generator in the energy basis.
struct QubitRates {
  double gamma_down = 0.0;  // emission g0 (1 + n0)
  double gamma_up = 0.0;    // absorption g0 n0
  double gamma1 = 0.0;      // total relaxation g0 (1 + 2 n0)
  double k_ee_ee = 0.0;
  double k_gg_ee = 0.0;
  double k_ee_gg = 0.0;
  double k_gg_gg = 0.0;
  double k_eg_eg = 0.0;
  double k_ge_ge = 0.0;
};

inline QubitRates qubit_rates(const QubitParams& p) {
  QubitRates r;
  r.gamma_down = p.g0 * (1.0 + p.n0);
  r.gamma_up = p.g0 * p.n0;
  r.gamma1 = r.gamma_down + r.gamma_up;
  r.k_ee_ee = -r.gamma_down;
  r.k_gg_ee = r.gamma_down;
  r.k_ee_gg = r.gamma_up;
  r.k_gg_gg = -r.gamma_up;
  r.k_eg_eg = -0.5 * r.gamma1;
  r.k_ge_ge = -0.5 * r.gamma1;
  return r;
}

// Exact solution of the locked master equation: populations relax to
// n0 / (1 + 2 n0) at rate gamma1, coherences precess at omega0 - delta and
// decay at gamma1 / 2.  rho0 must have unit trace.
inline Mat qubit_analytic(const QubitParams& p, const Mat& rho0, double t) {
  if (rho0.rows() != 2 || rho0.cols() != 2) throw ConfigError("qubit state must be 2x2");
  if (std::abs(rho0.trace() - cplx(1.0)) > 1e-9)
    throw ConfigError("qubit analytic solution assumes unit trace");
  const QubitRates r = qubit_rates(p);
  const double pee0 = rho0(0, 0).real();
  double pee = pee0;
  if (r.gamma1 > 0.0) {
    const double pss = r.gamma_up / r.gamma1;
    pee = pss + (pee0 - pss) * std::exp(-r.gamma1 * t);
  }
  const cplx phase = std::exp(cplx(-0.5 * r.gamma1 * t, -(p.omega0 - p.delta) * t));
  Mat rho(2, 2);
  rho(0, 0) = pee;
  rho(1, 1) = 1.0 - pee;
  rho(0, 1) = rho0(0, 1) * phase;
  rho(1, 0) = rho0(1, 0) * std::conj(phase);
  return rho;
}

// Effective two-level parameters read back off a kernel built for a qubit
// system: rates from the population block of the locked dissipator, the
// shift from the coherence element.
inline QubitParams derive_qubit_params(const BornKernel& kernel) {
  if (kernel.system().dim() != 2) throw ConfigError("qubit parameters need a two-level system");
  const QPGenerator qp = kernel.qp_generator();
  QubitParams p;
  p.omega0 = kernel.ediff(0, 1);
  const double gamma_down = -qp.dissipator.at(0, 0, 0, 0).real();
  const double gamma_up = qp.dissipator.at(0, 0, 1, 1).real();
  p.g0 = gamma_down - gamma_up;
  p.n0 = p.g0 > 0.0 ? gamma_up / p.g0 : 0.0;
  p.delta = qp.shift.at(0, 1, 0, 1).real();
  return p;
}

// The same dynamics assembled as an explicit jump-operator generator, for
// cross-checking the kernel route.
inline Superoperator qubit_lindblad_generator(const QubitParams& p) {
  const QubitRates r = qubit_rates(p);
  Mat h = Mat::Zero(2, 2);
  h(0, 0) = 0.5 * (p.omega0 - p.delta);
  h(1, 1) = -0.5 * (p.omega0 - p.delta);
  Mat sp = Mat::Zero(2, 2);
  sp(0, 1) = 1.0;
  Mat sm = Mat::Zero(2, 2);
  sm(1, 0) = 1.0;
  JumpGroup down{{sm}, Mat::Constant(1, 1, r.gamma_down)};
  JumpGroup up{{sp}, Mat::Constant(1, 1, r.gamma_up)};
  return gksl_builder(h, {down, up});
}

}  // namespace oqs
