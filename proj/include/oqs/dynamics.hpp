#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "oqs/core.hpp"
#include "oqs/kernel.hpp"

namespace oqs {

// Free propagator of coherences, diagonal in the energy basis; retarded, so
// zero for t < 0.
inline Superoperator free_transmission(const SystemSpec& sys, double t) {
  const int d = sys.dim();
  Superoperator s(d);
  if (t < 0.0) return s;
  for (int p = 0; p < d; ++p)
    for (int pp = 0; pp < d; ++pp)
      s.at(p, pp, p, pp) = std::exp(cplx(0.0, -sys.ediff(p, pp) * t));
  return s;
}

// Dressed propagator in frequency space, the inverse of
// -i (omega - E_pp') delta - K(omega).
inline Superoperator transmission_freq(const BornKernel& kernel, double omega, double eps) {
  const int d = kernel.system().dim();
  Mat a = -kernel.freq_kernel(omega, eps).matrix();
  for (int p = 0; p < d; ++p)
    for (int pp = 0; pp < d; ++pp)
      a(p * d + pp, p * d + pp) += cplx(0.0, -(omega - kernel.ediff(p, pp)));
  Eigen::FullPivLU<Mat> lu(a);
  if (!lu.isInvertible())
    throw NumericError("transmission matrix is singular at this frequency");
  return Superoperator(d, lu.inverse());
}

enum class ResonanceMode { qp, full };

struct ResonanceRow {
  int p = 0;
  int pp = 0;
  cplx omega;         // pole position, Im < 0 for decaying modes
  double residual = 0.0;  // |det| of the dressed inverse propagator at omega
  bool clustered = false; // row shares its pole frequency with other rows
};

namespace detail {

// Rows grouped by unperturbed pole frequency; grouping is done on the sorted
// values so the clusters are deterministic.
inline std::vector<std::vector<int>> pole_clusters(const BornKernel& kernel) {
  const int d = kernel.system().dim();
  std::vector<int> order(d * d);
  std::iota(order.begin(), order.end(), 0);
  auto evalue = [&](int r) { return kernel.ediff(r / d, r % d); };
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return evalue(a) < evalue(b); });
  std::vector<std::vector<int>> clusters;
  const double tol = kernel.options().energy_match_tol;
  for (int r : order) {
    if (clusters.empty() || evalue(r) - evalue(clusters.back().back()) >= tol)
      clusters.emplace_back();
    clusters.back().push_back(r);
  }
  return clusters;
}

inline cplx det_at(const BornKernel& kernel, const std::vector<int>& rows, cplx omega) {
  const int d = kernel.system().dim();
  const Superoperator k = kernel.analytic(omega);
  const int m = static_cast<int>(rows.size());
  Mat block(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      block(i, j) = -k.matrix()(rows[i], rows[j]);
      if (i == j) block(i, i) += cplx(0.0, -1.0) * (omega - kernel.ediff(rows[i] / d, rows[i] % d));
    }
  return block.determinant();
}

}  // namespace detail

// Complex pole positions of the dressed propagator, one row per element of
// the coherence vector.  qp mode reads them off the frequency-locked
// generator block by block; full mode then polishes each root on the
// analytically continued kernel with a damped Newton iteration.
inline std::vector<ResonanceRow> resonance_roots(const BornKernel& kernel, ResonanceMode mode,
                                                 double root_tol = 1e-9) {
  const int d = kernel.system().dim();
  const Superoperator gen = kernel.qp_generator().generator;
  std::vector<ResonanceRow> out;
  for (const auto& rows : detail::pole_clusters(kernel)) {
    const int m = static_cast<int>(rows.size());
    Mat block(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) block(i, j) = gen.matrix()(rows[i], rows[j]);
    Eigen::ComplexEigenSolver<Mat> es(block);
    if (es.info() != Eigen::Success) throw NumericError("resonance eigensolve failed");
    // Attach each eigenvalue to the row its eigenvector lives on.
    std::vector<bool> taken(static_cast<size_t>(m), false);
    for (int v = 0; v < m; ++v) {
      int best = -1;
      double best_w = -1.0;
      for (int i = 0; i < m; ++i) {
        const double w = std::abs(es.eigenvectors()(i, v));
        if (!taken[static_cast<size_t>(i)] && w > best_w) {
          best_w = w;
          best = i;
        }
      }
      taken[static_cast<size_t>(best)] = true;
      ResonanceRow row;
      row.p = rows[best] / d;
      row.pp = rows[best] % d;
      row.omega = cplx(0.0, 1.0) * es.eigenvalues()(v);
      row.clustered = m > 1;
      if (mode == ResonanceMode::full) {
        const double scale = std::max(1.0, std::abs(row.omega));
        cplx w = row.omega;
        for (int it = 0; it < 50; ++it) {
          const cplx f = detail::det_at(kernel, rows, w);
          const double h = 1e-6 * scale;
          const cplx fp = (detail::det_at(kernel, rows, w + h) -
                           detail::det_at(kernel, rows, w - h)) /
                          (2.0 * h);
          if (std::abs(fp) < 1e-300) break;
          const cplx step = f / fp;
          w -= step;
          if (std::abs(step) <= root_tol * scale) break;
        }
        row.omega = w;
      }
      row.residual = std::abs(detail::det_at(kernel, rows, row.omega));
      out.push_back(row);
    }
  }
  std::sort(out.begin(), out.end(), [d](const ResonanceRow& a, const ResonanceRow& b) {
    return a.p * d + a.pp < b.p * d + b.pp;
  });
  return out;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Mat> states;
  std::vector<DensityReport> reports;
  long accepted_steps = 0;
  long rejected_steps = 0;
  double max_trace_defect = 0.0;
  double max_herm_defect = 0.0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();

  void record(double t, Mat rho, const SimulationConfig& cfg) {
    DensityReport rep = check_density(rho, cfg.tol_herm, cfg.tol_trace, cfg.tol_pos);
    max_trace_defect = std::max(max_trace_defect, rep.trace_defect);
    max_herm_defect = std::max(max_herm_defect, rep.herm_defect);
    min_eigenvalue = std::min(min_eigenvalue, rep.min_eigenvalue);
    times.push_back(t);
    states.push_back(std::move(rho));
    reports.push_back(rep);
  }
};

namespace detail {

inline int output_node_count(const SimulationConfig& cfg) {
  const double span = cfg.t_stop - cfg.t_start;
  if (!(span > 0.0)) throw ConfigError("t_stop must exceed t_start");
  return static_cast<int>(std::floor(span / cfg.dt + 1e-9));
}

}  // namespace detail

// Time-local master equation d v/dt = G v integrated with classical
// fourth-order steps and step-doubling error control; the accepted value is
// the two-half-step result.  Nodes land exactly on the output grid.
inline Trajectory evolve_markov(const Superoperator& gen, const Mat& rho0,
                                const SimulationConfig& cfg) {
  cfg.validate();
  const DensityReport rep0 = check_density(rho0, cfg.tol_herm, cfg.tol_trace, cfg.tol_pos);
  if (!rep0.ok()) throw ConfigError("initial state is not a valid density matrix");
  const Mat& l = gen.matrix();
  if (l.rows() != rho0.rows() * rho0.rows())
    throw ConfigError("generator dimension does not match the state");
  auto rk4 = [&](const Vec& v, double h) -> Vec {
    const Vec k1 = l * v;
    const Vec k2 = l * (v + 0.5 * h * k1);
    const Vec k3 = l * (v + 0.5 * h * k2);
    const Vec k4 = l * (v + h * k3);
    return v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  Trajectory out;
  Vec v = vectorize(rho0);
  out.record(cfg.t_start, rho0, cfg);
  const int n_nodes = detail::output_node_count(cfg);
  double h = cfg.dt;
  double t = cfg.t_start;
  for (int k = 1; k <= n_nodes; ++k) {
    const double t_next = cfg.t_start + k * cfg.dt;
    while (t < t_next - 1e-12 * cfg.dt) {
      const double h_try = std::min(h, t_next - t);
      const Vec one = rk4(v, h_try);
      const Vec two = rk4(rk4(v, 0.5 * h_try), 0.5 * h_try);
      const double err = (two - one).cwiseAbs().maxCoeff() / 15.0;
      const double tol = cfg.ode_tol * std::max(1.0, v.cwiseAbs().maxCoeff());
      if (err <= tol) {
        v = two;
        t += h_try;
        ++out.accepted_steps;
        if (!v.allFinite()) throw NumericError("markov integration diverged");
      } else {
        ++out.rejected_steps;
      }
      const double fac = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 1.5;
      h = h_try * std::clamp(fac, 0.2, 1.5);
      if (h < 1e-14 * std::max(1.0, std::abs(t)))
        throw NumericError("markov step size underflow");
      if (out.accepted_steps + out.rejected_steps > 50'000'000)
        throw NumericError("markov step budget exhausted");
    }
    t = t_next;
    out.record(t, devectorize(v), cfg);
  }
  return out;
}

// Memory master equation d v/dt = L0 v(t) + integral over the sampled
// retarded kernel, trapezoid in the lag and a Heun predictor-corrector in
// time.  The solver step is the kernel sampling step; the output grid must
// be an integer multiple of it.  With history_depth > 0 the convolution is
// truncated at that many lags, refused unless the kernel edge has decayed
// below 1e-2 of its peak.
inline Trajectory evolve_memory(const SystemSpec& sys, const MemoryKernel& mk, const Mat& rho0,
                                const SimulationConfig& cfg) {
  cfg.validate();
  sys.validate();
  const int d = sys.dim();
  if (mk.dim() != d) throw ConfigError("kernel dimension does not match the system");
  const DensityReport rep0 = check_density(rho0, cfg.tol_herm, cfg.tol_trace, cfg.tol_pos);
  if (!rep0.ok()) throw ConfigError("initial state is not a valid density matrix");
  const double h = mk.dt;
  const int stride = static_cast<int>(std::lround(cfg.dt / h));
  if (stride < 1 || std::abs(stride * h - cfg.dt) > 1e-9 * cfg.dt)
    throw ConfigError("output step must be an integer multiple of the kernel step");
  const int n_nodes = detail::output_node_count(cfg);
  const long n_steps = static_cast<long>(n_nodes) * stride;
  const long lag_cap = cfg.history_depth > 0 ? cfg.history_depth : n_steps;
  const long kl = std::min(n_steps, lag_cap);
  if (static_cast<long>(mk.samples.size()) - 1 < kl)
    throw ConfigError("kernel horizon is shorter than the required history");
  if (cfg.history_depth > 0 && kl < n_steps) {
    double peak = 0.0;
    for (long j = 0; j <= kl; ++j) peak = std::max(peak, mk.samples[static_cast<size_t>(j)].max_abs());
    if (mk.samples[static_cast<size_t>(kl)].max_abs() > 1e-2 * peak)
      throw ConfigError("history_depth cuts the kernel before it has decayed");
  }
  const int d2 = d * d;
  // Kernel blocks K_kl .. K_1 stored left to right so any window
  // [K_J-1 .. K_1] against a contiguous run of past states is one product.
  Mat krev(d2, kl * d2);
  for (long i = 0; i < kl; ++i)
    krev.middleCols(i * d2, d2) = mk.samples[static_cast<size_t>(kl - i)].matrix();
  const Mat& k0 = mk.samples[0].matrix();
  Vec l0(d2);
  for (int p = 0; p < d; ++p)
    for (int pp = 0; pp < d; ++pp) l0(p * d + pp) = cplx(0.0, -sys.ediff(p, pp));
  Mat states(d2, n_steps + 1);
  states.col(0) = vectorize(rho0);
  Trajectory out;
  out.record(cfg.t_start, rho0, cfg);
  Vec f_prev = l0.asDiagonal() * states.col(0);
  for (long m = 1; m <= n_steps; ++m) {
    const long j_max = std::min(m, kl);
    Vec hist = Vec::Zero(d2);
    if (j_max >= 2)
      hist = krev.middleCols((kl - j_max + 1) * d2, (j_max - 1) * d2) *
             Eigen::Map<const Vec>(states.data() + (m - j_max + 1) * d2, (j_max - 1) * d2);
    hist += 0.5 * (mk.samples[static_cast<size_t>(j_max)].matrix() * states.col(m - j_max));
    hist *= h;
    auto rhs = [&](const Vec& vm) -> Vec {
      return l0.asDiagonal() * vm + (0.5 * h) * (k0 * vm) + hist;
    };
    const Vec vp = states.col(m - 1) + h * f_prev;
    const Vec f_pred = rhs(vp);
    states.col(m) = states.col(m - 1) + (0.5 * h) * (f_prev + f_pred);
    f_prev = rhs(states.col(m));
    ++out.accepted_steps;
    if (!states.col(m).allFinite()) throw NumericError("memory integration diverged");
    if (m % stride == 0)
      out.record(cfg.t_start + static_cast<double>(m / stride) * cfg.dt,
                 devectorize(states.col(m)), cfg);
  }
  return out;
}

// Stationary state from the null space of the generator.  Uniqueness is
// checked through the second-smallest singular value.
inline Mat steady_state(const Superoperator& gen) {
  const int n = gen.sdim();
  Eigen::JacobiSVD<Mat> svd(gen.matrix(), Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(n - 1) > 1e-6 * std::max(sv(0), 1e-300))
    throw NumericError("generator has no stationary null vector");
  if (n >= 2 && sv(n - 2) < 1e-10 * std::max(sv(0), 1e-300))
    throw NumericError("stationary state is not unique");
  Vec v = svd.matrixV().col(n - 1);
  cplx tr = 0.0;
  const int d = gen.dim();
  for (int p = 0; p < d; ++p) tr += v(p * d + p);
  if (std::abs(tr) < 1e-12 * v.norm()) throw NumericError("stationary vector is traceless");
  Mat rho = devectorize(v / tr);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();
  return rho;
}

}  // namespace oqs
