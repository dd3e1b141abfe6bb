#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "oqs/common.hpp"

namespace oqs {

// System described in its energy eigenbasis: a list of eigenvalues E_p and a
// list of coupling operators S^a.  Couplings come in conjugate pairs: the
// involution `conjugate_pairs` maps each channel to the one carrying the
// adjoint operator, S^{pair(a)} = (S^a)^dagger.  Within a pair, the channel
// with the lower index couples to the annihilation side of its reservoir and
// its partner to the creation side.
struct SystemSpec {
  RealVec energies;
  std::vector<Mat> couplings;
  std::vector<int> conjugate_pairs;

  int dim() const { return static_cast<int>(energies.size()); }
  int channels() const { return static_cast<int>(couplings.size()); }

  // E_p - E_q
  double ediff(int p, int q) const { return energies[p] - energies[q]; }

  int pair(int a) const { return conjugate_pairs[static_cast<size_t>(a)]; }

  // true if channel a couples to the annihilation operator of its reservoir
  bool lowering_coupled(int a) const { return a < pair(a); }

  double max_gap() const {
    double m = 0.0;
    for (int p = 0; p < dim(); ++p)
      for (int q = 0; q < dim(); ++q) m = std::max(m, std::abs(ediff(p, q)));
    return m;
  }

  // scale used to make the energy-match tolerance dimensionally sane
  double energy_scale() const { return std::max(1.0, max_gap()); }

  void validate(double tol = 1e-12) const {
    const int d = dim();
    if (d < 2) throw ConfigError("system dimension must be at least 2");
    for (int p = 0; p < d; ++p)
      if (!std::isfinite(energies[p]))
        throw ConfigError("system energies must be finite");
    const int nc = channels();
    if (nc == 0 || nc % 2 != 0)
      throw ConfigError("couplings must come in conjugate pairs");
    if (static_cast<int>(conjugate_pairs.size()) != nc)
      throw ConfigError("conjugate_pairs length must match couplings");
    for (int a = 0; a < nc; ++a) {
      const int b = conjugate_pairs[static_cast<size_t>(a)];
      if (b < 0 || b >= nc || b == a || conjugate_pairs[static_cast<size_t>(b)] != a)
        throw ConfigError("conjugate_pairs must be a fixed-point-free involution");
      if (couplings[static_cast<size_t>(a)].rows() != d ||
          couplings[static_cast<size_t>(a)].cols() != d)
        throw ConfigError("coupling operator has wrong dimensions");
      const double defect =
          (couplings[static_cast<size_t>(a)].adjoint() - couplings[static_cast<size_t>(b)])
              .cwiseAbs()
              .maxCoeff();
      if (defect > tol * std::max(1.0, couplings[static_cast<size_t>(a)].cwiseAbs().maxCoeff()))
        throw ConfigError("paired couplings are not adjoints of each other");
    }
  }
};

using DensityMatrix = Mat;

// Flattening convention used everywhere: a matrix index pair (p, p') maps to
// the vector slot p*d + p', i.e. row-pair-major.  vec(rho)[p*d+p'] = rho_{pp'}.
inline Vec vectorize(const Mat& rho) {
  const int d = static_cast<int>(rho.rows());
  Vec v(d * d);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) v[p * d + q] = rho(p, q);
  return v;
}

inline Mat devectorize(const Vec& v) {
  const int d2 = static_cast<int>(v.size());
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d2))));
  if (d * d != d2) throw ConfigError("vector length is not a perfect square");
  Mat rho(d, d);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) rho(p, q) = v[p * d + q];
  return rho;
}

// Linear map on vectorized density matrices, stored dense.  Element access is
// by the four physical indices; (p,p') is the row pair, (q,q') the column pair.
class Superoperator {
 public:
  explicit Superoperator(int d) : d_(d), m_(Mat::Zero(d * d, d * d)) {}
  Superoperator(int d, Mat m) : d_(d), m_(std::move(m)) {}

  static Superoperator identity(int d) {
    return Superoperator(d, Mat::Identity(d * d, d * d));
  }

  int dim() const { return d_; }
  int sdim() const { return d_ * d_; }

  cplx& at(int p, int pp, int q, int qp) { return m_(p * d_ + pp, q * d_ + qp); }
  cplx at(int p, int pp, int q, int qp) const { return m_(p * d_ + pp, q * d_ + qp); }

  Mat& matrix() { return m_; }
  const Mat& matrix() const { return m_; }

  Vec apply(const Vec& v) const { return m_ * v; }
  Mat apply(const Mat& rho) const { return devectorize(m_ * vectorize(rho)); }

  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }

  // max over columns (q,q') of |sum_p M_{pp,qq'}|; zero for any map that
  // preserves the trace of rho.
  double trace_column_defect() const {
    double worst = 0.0;
    for (int q = 0; q < d_; ++q)
      for (int qp = 0; qp < d_; ++qp) {
        cplx s = 0.0;
        for (int p = 0; p < d_; ++p) s += at(p, p, q, qp);
        worst = std::max(worst, std::abs(s));
      }
    return worst;
  }

  // max |conj(this_{pp',qq'}) - other_{p'p,q'q}|.  With other == *this this is
  // the defect of the symmetry that makes the map send Hermitian matrices to
  // Hermitian matrices.
  double hermiticity_pair_defect(const Superoperator& other) const {
    double worst = 0.0;
    for (int p = 0; p < d_; ++p)
      for (int pp = 0; pp < d_; ++pp)
        for (int q = 0; q < d_; ++q)
          for (int qp = 0; qp < d_; ++qp)
            worst = std::max(worst, std::abs(std::conj(at(p, pp, q, qp)) -
                                             other.at(pp, p, qp, q)));
    return worst;
  }
  double hermiticity_pair_defect() const { return hermiticity_pair_defect(*this); }

  Superoperator& operator+=(const Superoperator& o) {
    m_ += o.m_;
    return *this;
  }
  Superoperator& operator*=(cplx s) {
    m_ *= s;
    return *this;
  }
  friend Superoperator operator+(Superoperator a, const Superoperator& b) {
    a += b;
    return a;
  }
  friend Superoperator operator*(Superoperator a, cplx s) {
    a *= s;
    return a;
  }

  friend Superoperator operator*(cplx s, Superoperator a) {
    a *= s;
    return a;
  }

 private:
  int d_;
  Mat m_;
};

// Superoperator for rho -> M rho N.
inline Superoperator sandwich_super(const Mat& m, const Mat& n) {
  const int d = static_cast<int>(m.rows());
  Superoperator s(d);
  for (int p = 0; p < d; ++p)
    for (int pp = 0; pp < d; ++pp)
      for (int q = 0; q < d; ++q)
        for (int qp = 0; qp < d; ++qp) s.at(p, pp, q, qp) = m(p, q) * n(qp, pp);
  return s;
}

// Superoperator for rho -> -i [H, rho].
inline Superoperator commutator_super(const Mat& h) {
  const int d = static_cast<int>(h.rows());
  const Mat id = Mat::Identity(d, d);
  Superoperator s = sandwich_super(h, id);
  s.matrix() -= sandwich_super(id, h).matrix();
  s *= cplx(0.0, -1.0);
  return s;
}

struct DensityReport {
  double herm_defect = 0.0;
  double trace_defect = 0.0;
  double min_eigenvalue = 0.0;
  double purity = 0.0;
  bool hermitian_ok = false;
  bool trace_ok = false;
  bool positive_ok = false;
  bool ok() const { return hermitian_ok && trace_ok && positive_ok; }
};

inline DensityReport check_density(const Mat& rho, double tol_herm = 1e-10,
                                   double tol_trace = 1e-10, double tol_pos = 1e-8) {
  DensityReport r;
  r.herm_defect = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  r.trace_defect = std::abs(rho.trace() - cplx(1.0, 0.0));
  const Mat herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(herm, Eigen::EigenvaluesOnly);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.purity = std::real((herm * herm).trace());
  r.hermitian_ok = r.herm_defect <= tol_herm;
  r.trace_ok = r.trace_defect <= tol_trace;
  r.positive_ok = r.min_eigenvalue >= -tol_pos;
  return r;
}

enum class EvolutionMode { markov, memory };

// Numerical knobs shared by the solvers and kernel builders.  Tolerances are
// absolute unless noted otherwise.
struct SimulationConfig {
  double t_start = 0.0;
  double t_stop = 10.0;
  double dt = 1e-2;
  double tol_herm = 1e-10;
  double tol_trace = 1e-10;
  double tol_pos = 1e-8;
  double energy_match_tol = 1e-9;  // relative to the system energy scale
  double pv_exclusion = 1e-3;      // principal-value window half-width
  double omega_cutoff = 0.0;       // 0 selects the automatic cutoff
  int history_depth = 0;           // memory convolution cap in steps; 0 = full
  double ode_tol = 1e-8;           // step-halving local error bound
  double root_tol = 1e-9;          // resonance root convergence
  bool rwa = true;
  EvolutionMode mode = EvolutionMode::markov;
  std::uint64_t seed = 20260822ull;

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(t_stop > t_start)) throw ConfigError("t_stop must exceed t_start");
    if (!(tol_herm > 0.0 && tol_trace > 0.0 && tol_pos > 0.0))
      throw ConfigError("density tolerances must be positive");
    if (!(energy_match_tol > 0.0)) throw ConfigError("energy_match_tol must be positive");
    if (!(pv_exclusion > 0.0)) throw ConfigError("pv_exclusion must be positive");
    if (omega_cutoff < 0.0) throw ConfigError("omega_cutoff must be non-negative");
    if (history_depth < 0) throw ConfigError("history_depth must be non-negative");
    if (!(ode_tol > 0.0) || !(root_tol > 0.0))
      throw ConfigError("solver tolerances must be positive");
  }
};

}  // namespace oqs
