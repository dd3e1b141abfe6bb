#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "oqs/bath.hpp"
#include "oqs/core.hpp"

namespace oqs {

struct KernelOptions {
  bool rwa = true;
  double energy_match_tol = 1e-9;  // absolute tolerance of the selection rule
  double pv_window = 1e-3;         // relative principal-value exclusion window

  static KernelOptions from_config(const SystemSpec& sys, const SimulationConfig& cfg) {
    KernelOptions o;
    o.rwa = cfg.rwa;
    o.energy_match_tol = cfg.energy_match_tol * sys.energy_scale();
    o.pv_window = cfg.pv_exclusion;
    return o;
  }
};

// Constant (frequency-locked) generator: d rho/dt = (-i E_pp' + i shift +
// dissipator) rho, acting on vectorized density matrices.
struct QPGenerator {
  Superoperator shift;
  Superoperator dissipator;
  Superoperator generator;
  // Distinct index pairs (pp') != (qq') sharing a pole frequency within
  // tolerance, population rows excluded (those always share the zero pole).
  int degenerate_pairs = 0;
};

// Uniformly sampled retarded kernel K(j dt), j = 0..n, for the history
// convolution of the memory solver.
struct MemoryKernel {
  double dt = 0.0;
  std::vector<Superoperator> samples;
  double max_trace_defect = 0.0;     // max over samples, relative to max |K|
  double max_symmetry_defect = 0.0;  // conjugation-swap defect, relative

  int dim() const { return samples.empty() ? 0 : samples.front().dim(); }
  double duration() const { return samples.empty() ? 0.0 : dt * (samples.size() - 1); }
};

namespace detail {

struct ReadKey {
  int chan;
  std::uint64_t arg_bits;
  std::uint64_t eps_bits;
  bool operator==(const ReadKey& o) const {
    return chan == o.chan && arg_bits == o.arg_bits && eps_bits == o.eps_bits;
  }
};

struct ReadKeyHash {
  size_t operator()(const ReadKey& k) const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ull;
    };
    mix(static_cast<std::uint64_t>(k.chan));
    mix(k.arg_bits);
    mix(k.eps_bits);
    return static_cast<size_t>(h);
  }
};

}  // namespace detail

// Second-order (in the coupling) kernel for one system + bath, assembled in
// the energy basis.  All spectral reads go through a memoized Cauchy/PV layer
// keyed on the exact bit pattern of the argument; paired entries of the
// trace and conjugation-swap identities then reuse identical quadrature
// values, so those identities hold to rounding, not to quadrature tolerance.
// The memoization makes instances non-thread-safe.
class BornKernel {
 public:
  BornKernel(SystemSpec sys, BathCorrelation corr, KernelOptions opt)
      : sys_(std::move(sys)), corr_(std::move(corr)), opt_(opt) {
    sys_.validate();
    const int d = sys_.dim();
    ediff_.resize(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) ediff_(i, j) = sys_.energies[i] - sys_.energies[j];
    for (int a = 0; a < sys_.channels(); ++a) {
      const int b = sys_.pair(a);
      chan_ab_.push_back(channel_pair(bath_channel(a), bath_channel(b)));
      chan_ba_.push_back(channel_pair(bath_channel(b), bath_channel(a)));
    }
  }

  const SystemSpec& system() const { return sys_; }
  const BathCorrelation& bath() const { return corr_; }
  const KernelOptions& options() const { return opt_; }
  double ediff(int i, int j) const { return ediff_(i, j); }

  // Side of the conjugate pair the coupling rides on: 1 couples the bath
  // annihilation combination, 2 the creation combination.
  int bath_channel(int a) const { return sys_.lowering_coupled(a) ? 1 : 2; }

  // Energy-conservation selection rule |E_pq + E_q'p'| < tol on the element
  // (pp', qq'); with rwa off everything passes (Redfield-like kernel).
  bool selected(int p, int pp, int q, int qp) const {
    if (!opt_.rwa) return true;
    return std::abs(ediff_(p, q) + ediff_(qp, pp)) < opt_.energy_match_tol;
  }

  // Retarded time-domain kernel at t >= 0.  Four terms; the two cross terms
  // carry the transposed channel index.  No selection rule here: the RWA is
  // a frequency-domain reduction.
  Superoperator time_kernel(double tau) const {
    if (tau < 0.0) throw ConfigError("time kernel is retarded; t must be >= 0");
    const int d = sys_.dim();
    Vec u(d);
    for (int i = 0; i < d; ++i) u(i) = std::exp(cplx(0.0, -sys_.energies[i] * tau));
    const Mat U = u.asDiagonal();
    const Mat Ud = u.conjugate().asDiagonal();
    Superoperator out(d);
    for (int a = 0; a < sys_.channels(); ++a) {
      const int b = sys_.pair(a);
      const Mat& Sa = sys_.couplings[a];
      const Mat& Sb = sys_.couplings[b];
      const cplx dab_p = corr_.time(chan_ab_[a], tau);
      const cplx dab_m = corr_.time(chan_ab_[a], -tau);
      const cplx dba_p = corr_.time(chan_ba_[a], tau);
      const cplx dba_m = corr_.time(chan_ba_[a], -tau);
      out += sandwich_super(Sa * U * Sb, Ud) * (-dab_p);
      out += sandwich_super(U, Sa * Ud * Sb) * (-dab_m);
      out += sandwich_super(Sa * U, Sb * Ud) * dba_m;
      out += sandwich_super(U * Sa, Ud * Sb) * dba_p;
    }
    return out;
  }

  // Fourier kernel at real omega with the +i eps prescription.
  Superoperator freq_kernel(double omega, double eps) const {
    if (!(eps > 0.0)) throw ConfigError("freq kernel needs eps > 0");
    return assemble([&](Chan c, int sigma, double x0) { return jread(c, sigma, x0, eps); },
                    omega);
  }

  // Analytic continuation of the eps -> 0+ kernel to complex omega, second
  // sheet below the positive-frequency cut.  Real omega gives the limit
  // value (principal value plus on-shell half-weight).
  Superoperator analytic(cplx omega) const {
    const int d = sys_.dim();
    Superoperator out(d);
    element_loop([&](int p, int pp, int q, int qp) {
      cplx val = 0.0;
      per_pair_terms(p, pp, q, qp, [&](Chan c, int sigma, double elock, cplx coeff) {
        const int s = (c == Chan::d12) ? sigma : -sigma;
        const cplx x0 = omega + elock;
        const cplx j = (s > 0) ? corr_.cauchy(c, x0, 0.0, true)
                               : -corr_.cauchy(c, -x0, 0.0, false);
        val += coeff * j;
      });
      out.at(p, pp, q, qp) = val;
    });
    return out;
  }

  // On-shell (delta-function) part of the Plemelj split: pure spectral reads,
  // no integrals.
  Superoperator dissipator_at(double omega) const {
    const int d = sys_.dim();
    Superoperator out(d);
    element_loop([&](int p, int pp, int q, int qp) {
      cplx val = 0.0;
      per_pair_terms(p, pp, q, qp, [&](Chan c, int sigma, double elock, cplx coeff) {
        // On-shell weight of 1/(x + i eps) is -i/2 per unit spectral density;
        // the read argument keeps the orientation sigma of the term.
        const double arg = sigma > 0 ? omega + elock : -(omega + elock);
        val += coeff * cplx(0.0, -0.5) * corr_.freq(c, arg);
      });
      out.at(p, pp, q, qp) = val;
    });
    return out;
  }

  // Principal-value part of the Plemelj split; the kernel is dissipator_at +
  // i * shift_at.
  Superoperator shift_at(double omega) const {
    const int d = sys_.dim();
    Superoperator out(d);
    element_loop([&](int p, int pp, int q, int qp) {
      cplx val = 0.0;
      per_pair_terms(p, pp, q, qp, [&](Chan c, int sigma, double elock, cplx coeff) {
        // The kernel is dissipator + i * shift, so the shift collects the
        // principal-value part divided by i.
        val += coeff * cplx(0.0, -1.0) * pvread(c, sigma, omega + elock);
      });
      out.at(p, pp, q, qp) = val;
    });
    return out;
  }

  // Frequency-locked constant dissipator: every row (pp') reads the spectrum
  // at its own unperturbed pole.
  Superoperator qp_dissipator() const {
    const int d = sys_.dim();
    Superoperator out(d);
    element_loop([&](int p, int pp, int q, int qp) {
      cplx val = 0.0;
      for (int a = 0; a < sys_.channels(); ++a) {
        const int b = sys_.pair(a);
        const Mat& Sa = sys_.couplings[a];
        const Mat& Sb = sys_.couplings[b];
        if (pp == qp)
          for (int l = 0; l < d; ++l) {
            const cplx coeff = Sa(p, l) * Sb(l, q);
            if (coeff != 0.0) val += -0.5 * coeff * corr_.freq(chan_ab_[a], ediff_(p, l));
          }
        if (p == q)
          for (int l = 0; l < d; ++l) {
            const cplx coeff = Sa(qp, l) * Sb(l, pp);
            if (coeff != 0.0) val += -0.5 * coeff * corr_.freq(chan_ab_[a], ediff_(pp, l));
          }
        const cplx c34 = Sa(p, q) * Sb(qp, pp);
        if (c34 != 0.0) {
          val += 0.5 * c34 * corr_.freq(chan_ba_[a], ediff_(qp, pp));
          val += 0.5 * c34 * corr_.freq(chan_ba_[a], ediff_(q, p));
        }
      }
      out.at(p, pp, q, qp) = val;
    });
    return out;
  }

  // Frequency-locked constant shift (real principal values).
  Superoperator qp_shift() const {
    const int d = sys_.dim();
    Superoperator out(d);
    element_loop([&](int p, int pp, int q, int qp) {
      cplx val = 0.0;
      for (int a = 0; a < sys_.channels(); ++a) {
        const int b = sys_.pair(a);
        const Mat& Sa = sys_.couplings[a];
        const Mat& Sb = sys_.couplings[b];
        if (pp == qp)
          for (int l = 0; l < d; ++l) {
            const cplx coeff = Sa(p, l) * Sb(l, q);
            if (coeff != 0.0) val += -coeff * pvread(chan_ab_[a], +1, ediff_(p, l));
          }
        if (p == q)
          for (int l = 0; l < d; ++l) {
            const cplx coeff = Sa(qp, l) * Sb(l, pp);
            if (coeff != 0.0) val += -coeff * pvread(chan_ab_[a], -1, ediff_(l, pp));
          }
        const cplx c34 = Sa(p, q) * Sb(qp, pp);
        if (c34 != 0.0) {
          val += c34 * pvread(chan_ba_[a], +1, ediff_(qp, pp));
          val += c34 * pvread(chan_ba_[a], -1, ediff_(p, q));
        }
      }
      out.at(p, pp, q, qp) = val;
    });
    return out;
  }

  QPGenerator qp_generator() const {
    const int d = sys_.dim();
    QPGenerator g{Superoperator(d), Superoperator(d), Superoperator(d), 0};
    g.shift = qp_shift();
    g.dissipator = qp_dissipator();
    for (int p = 0; p < d; ++p)
      for (int pp = 0; pp < d; ++pp)
        for (int q = 0; q < d; ++q)
          for (int qp = 0; qp < d; ++qp) {
            cplx v = cplx(0.0, 1.0) * g.shift.at(p, pp, q, qp) + g.dissipator.at(p, pp, q, qp);
            if (p == q && pp == qp) v += cplx(0.0, -ediff_(p, pp));
            g.generator.at(p, pp, q, qp) = v;
          }
    // Pole degeneracy between distinct rows; the population cluster at zero
    // frequency is structural and not reported.
    for (int i = 0; i < d * d; ++i)
      for (int j = i + 1; j < d * d; ++j) {
        const int p1 = i / d, q1 = i % d, p2 = j / d, q2 = j % d;
        if (p1 == q1 && p2 == q2) continue;
        if (std::abs(ediff_(p1, q1) - ediff_(p2, q2)) < opt_.energy_match_tol)
          ++g.degenerate_pairs;
      }
    return g;
  }

  // The same constant dissipator assembled along the textbook route: jump
  // operators projected on transition frequencies with bath reads
  // gamma^{ab}(w) = <B^{a dagger} B^b>(w), adjoints taken explicitly.  Kept
  // independent of qp_dissipator so the two can be compared as a check.
  Superoperator standard_lindblad() const {
    const int d = sys_.dim();
    Superoperator out(d);
    element_loop([&](int p, int pp, int q, int qp) {
      cplx val = 0.0;
      for (int a = 0; a < sys_.channels(); ++a) {
        const Mat& S = sys_.couplings[a];
        const Mat adj = sys_.couplings[a].adjoint();
        // <B^{a dagger}(t) B^a(0)> carries the channel of (pair(a), a).
        const Chan g_chan = channel_pair(bath_channel(sys_.pair(a)), bath_channel(a));
        const cplx c12 = S(p, q) * adj(qp, pp);
        if (c12 != 0.0) {
          val += 0.5 * c12 * corr_.freq(g_chan, ediff_(q, p));
          val += 0.5 * c12 * corr_.freq(g_chan, ediff_(qp, pp));
        }
        if (pp == qp)
          for (int l = 0; l < d; ++l) {
            const cplx coeff = adj(p, l) * S(l, q);
            if (coeff != 0.0) val += -0.5 * coeff * corr_.freq(g_chan, ediff_(p, l));
          }
        if (p == q)
          for (int l = 0; l < d; ++l) {
            const cplx coeff = adj(qp, l) * S(l, pp);
            if (coeff != 0.0) val += -0.5 * coeff * corr_.freq(g_chan, ediff_(pp, l));
          }
      }
      out.at(p, pp, q, qp) = val;
    });
    return out;
  }

 private:
  template <typename F>
  void element_loop(F&& f) const {
    const int d = sys_.dim();
    for (int p = 0; p < d; ++p)
      for (int pp = 0; pp < d; ++pp)
        for (int q = 0; q < d; ++q)
          for (int qp = 0; qp < d; ++qp)
            if (selected(p, pp, q, qp)) f(p, pp, q, qp);
  }

  // The four Fourier-kernel terms for one element.  emit(channel, sigma,
  // locked energy offset, coefficient): the term is coeff * integral of
  // D-tilde(sigma * w') / (omega + offset - w' + i eps), with coeff carrying
  // the -i/+i prefactor and the matrix elements.
  template <typename Emit>
  void per_pair_terms(int p, int pp, int q, int qp, Emit&& emit) const {
    const cplx mi(0.0, -1.0), pi_(0.0, 1.0);
    const int d = sys_.dim();
    for (int a = 0; a < sys_.channels(); ++a) {
      const int b = sys_.pair(a);
      const Mat& Sa = sys_.couplings[a];
      const Mat& Sb = sys_.couplings[b];
      if (pp == qp)
        for (int l = 0; l < d; ++l) {
          const cplx coeff = Sa(p, l) * Sb(l, q);
          if (coeff != 0.0) emit(chan_ab_[a], +1, ediff_(pp, l), mi * coeff);
        }
      if (p == q)
        for (int l = 0; l < d; ++l) {
          const cplx coeff = Sa(qp, l) * Sb(l, pp);
          if (coeff != 0.0) emit(chan_ab_[a], -1, ediff_(l, p), mi * coeff);
        }
      const cplx c34 = Sa(p, q) * Sb(qp, pp);
      if (c34 != 0.0) {
        emit(chan_ba_[a], -1, ediff_(pp, q), pi_ * c34);
        emit(chan_ba_[a], +1, ediff_(qp, p), pi_ * c34);
      }
    }
  }

  template <typename Read>
  Superoperator assemble(Read&& read, double omega) const {
    const int d = sys_.dim();
    Superoperator out(d);
    element_loop([&](int p, int pp, int q, int qp) {
      cplx val = 0.0;
      per_pair_terms(p, pp, q, qp, [&](Chan c, int sigma, double elock, cplx coeff) {
        val += coeff * read(c, sigma, omega + elock);
      });
      out.at(p, pp, q, qp) = val;
    });
    return out;
  }

  // Oriented Cauchy read: integral of Phi_c(v) / (x0 - sigma_eff v + i eps)
  // over v > 0, reduced to the canonical +1 orientation by exact negation
  // and conjugation so mirrored arguments share one cache slot.
  cplx jread(Chan c, int sigma, double x0, double eps) const {
    const int s = (c == Chan::d12) ? sigma : -sigma;
    if (s > 0) return cached_cauchy(c, x0, eps);
    return -std::conj(cached_cauchy(c, -x0, eps));
  }

  double pvread(Chan c, int sigma, double x0) const {
    const int s = (c == Chan::d12) ? sigma : -sigma;
    if (s > 0) return cached_pv(c, x0);
    return -cached_pv(c, -x0);
  }

  cplx cached_cauchy(Chan c, double y, double eps) const {
    const detail::ReadKey key{static_cast<int>(c), std::bit_cast<std::uint64_t>(y),
                              std::bit_cast<std::uint64_t>(eps)};
    auto it = cauchy_cache_.find(key);
    if (it != cauchy_cache_.end()) return it->second;
    const cplx v = corr_.cauchy(c, y, eps, true);
    cauchy_cache_.emplace(key, v);
    return v;
  }

  double cached_pv(Chan c, double y) const {
    const detail::ReadKey key{static_cast<int>(c), std::bit_cast<std::uint64_t>(y), 0};
    auto it = pv_cache_.find(key);
    if (it != pv_cache_.end()) return it->second;
    const double v = corr_.cauchy_pv(c, y, opt_.pv_window * std::max(1.0, std::abs(y)));
    pv_cache_.emplace(key, v);
    return v;
  }

  SystemSpec sys_;
  BathCorrelation corr_;
  KernelOptions opt_;
  Eigen::MatrixXd ediff_;
  std::vector<Chan> chan_ab_, chan_ba_;
  mutable std::unordered_map<detail::ReadKey, cplx, detail::ReadKeyHash> cauchy_cache_;
  mutable std::unordered_map<detail::ReadKey, double, detail::ReadKeyHash> pv_cache_;
};

inline MemoryKernel sample_born_kernel(const BornKernel& kernel, double dt, int n_samples) {
  if (!(dt > 0.0) || n_samples < 1) throw ConfigError("kernel sampling needs dt > 0, n >= 1");
  MemoryKernel mk;
  mk.dt = dt;
  mk.samples.reserve(static_cast<size_t>(n_samples) + 1);
  double scale = 0.0;
  for (int j = 0; j <= n_samples; ++j) {
    Superoperator s = kernel.time_kernel(j * dt);
    scale = std::max(scale, s.max_abs());
    mk.samples.push_back(std::move(s));
  }
  for (const auto& s : mk.samples) {
    mk.max_trace_defect = std::max(mk.max_trace_defect, s.trace_column_defect());
    mk.max_symmetry_defect = std::max(mk.max_symmetry_defect, s.hermiticity_pair_defect(s));
  }
  if (scale > 0.0) {
    mk.max_trace_defect /= scale;
    mk.max_symmetry_defect /= scale;
  }
  return mk;
}

// One group of jump operators sharing a Hermitian rate matrix.
struct JumpGroup {
  std::vector<Mat> ops;
  Mat gamma;
};

// Generator -i[H, rho] + sum_k gamma_k^{ab} (S^b rho S^{a dag}
// - 1/2 {S^{a dag} S^b, rho}).
inline Superoperator gksl_builder(const Mat& h, const std::vector<JumpGroup>& groups) {
  const int d = static_cast<int>(h.rows());
  if (h.cols() != d) throw ConfigError("gksl hamiltonian must be square");
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()))
    throw ConfigError("gksl hamiltonian must be Hermitian");
  Superoperator out = commutator_super(h);
  const Mat id = Mat::Identity(d, d);
  for (const auto& g : groups) {
    const int n = static_cast<int>(g.ops.size());
    if (g.gamma.rows() != n || g.gamma.cols() != n)
      throw ConfigError("gksl rate matrix size must match the jump count");
    if ((g.gamma - g.gamma.adjoint()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, g.gamma.cwiseAbs().maxCoeff()))
      throw ConfigError("gksl rate matrix must be Hermitian");
    for (const auto& op : g.ops)
      if (op.rows() != d || op.cols() != d) throw ConfigError("gksl jump dimension mismatch");
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const cplx r = g.gamma(a, b);
        if (r == 0.0) continue;
        const Mat adj = g.ops[a].adjoint();
        out += sandwich_super(g.ops[b], adj) * r;
        const Mat anti = adj * g.ops[b];
        out += (sandwich_super(anti, id) + sandwich_super(id, anti)) * (-0.5 * r);
      }
  }
  return out;
}

}  // namespace oqs
