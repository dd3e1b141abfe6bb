#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "oqs/config.hpp"
#include "oqs/dynamics.hpp"
#include "oqs/io.hpp"
#include "oqs/kernel.hpp"
#include "oqs/qubit.hpp"
#include "oqs/wick.hpp"

namespace oqs {

inline BathCorrelation make_correlation(const RunConfig& rc) {
  const double cutoff = effective_cutoff(rc.bath, rc.system.max_gap(), rc.sim.omega_cutoff);
  BathCorrelation corr(rc.bath, cutoff);
  corr.set_pv_delta(rc.sim.pv_exclusion);
  return corr;
}

inline BornKernel make_kernel(const RunConfig& rc) {
  return BornKernel(rc.system, make_correlation(rc), KernelOptions::from_config(rc.system, rc.sim));
}

inline Mat initial_state_or_default(const RunConfig& rc) {
  if (rc.initial_state.rows() > 0) return rc.initial_state;
  Mat rho = Mat::Zero(rc.system.dim(), rc.system.dim());
  rho(0, 0) = 1.0;
  return rho;
}

inline Table trajectory_table(const Trajectory& traj, int d) {
  Table t;
  t.columns.push_back("time");
  for (int p = 0; p < d; ++p)
    for (int pp = 0; pp < d; ++pp) {
      t.columns.push_back("re_rho_" + std::to_string(p) + "_" + std::to_string(pp));
      t.columns.push_back("im_rho_" + std::to_string(p) + "_" + std::to_string(pp));
    }
  t.columns.push_back("trace_defect");
  t.columns.push_back("herm_defect");
  t.columns.push_back("min_eig");
  for (size_t k = 0; k < traj.times.size(); ++k) {
    std::vector<std::string> row;
    row.push_back(fmt17(traj.times[k]));
    for (int p = 0; p < d; ++p)
      for (int pp = 0; pp < d; ++pp) {
        row.push_back(fmt17(traj.states[k](p, pp).real()));
        row.push_back(fmt17(traj.states[k](p, pp).imag()));
      }
    row.push_back(fmt17(traj.reports[k].trace_defect));
    row.push_back(fmt17(traj.reports[k].herm_defect));
    row.push_back(fmt17(traj.reports[k].min_eigenvalue));
    t.row(std::move(row));
  }
  return t;
}

inline Trajectory run_simulation(const RunConfig& rc) {
  const BornKernel kernel = make_kernel(rc);
  const Mat rho0 = initial_state_or_default(rc);
  if (rc.sim.mode == EvolutionMode::markov)
    return evolve_markov(kernel.qp_generator().generator, rho0, rc.sim);
  const double h = rc.sim.dt / rc.solver_substeps;
  const long n_steps =
      static_cast<long>(detail::output_node_count(rc.sim)) * rc.solver_substeps;
  const long horizon =
      rc.sim.history_depth > 0 ? std::min<long>(n_steps, rc.sim.history_depth) : n_steps;
  const MemoryKernel mk = sample_born_kernel(kernel, h, static_cast<int>(horizon));
  return evolve_memory(rc.system, mk, rho0, rc.sim);
}

inline Table simulate_table(const RunConfig& rc) {
  return trajectory_table(run_simulation(rc), rc.system.dim());
}

inline Table kernel_scan_table(const RunConfig& rc) {
  const BornKernel kernel = make_kernel(rc);
  const int d = rc.system.dim();
  Table t;
  t.columns.push_back("omega");
  for (int p = 0; p < d; ++p)
    for (int pp = 0; pp < d; ++pp)
      for (int q = 0; q < d; ++q)
        for (int qp = 0; qp < d; ++qp) {
          const std::string tag = std::to_string(p) + std::to_string(pp) + "_" +
                                  std::to_string(q) + std::to_string(qp);
          t.columns.push_back("re_k_" + tag);
          t.columns.push_back("im_k_" + tag);
        }
  for (int i = 0; i < rc.scan.count; ++i) {
    const double w = rc.scan.omega_min + (rc.scan.omega_max - rc.scan.omega_min) * i /
                                             (rc.scan.count - 1);
    const Superoperator k = kernel.freq_kernel(w, rc.scan.eps);
    std::vector<std::string> row;
    row.push_back(fmt17(w));
    for (int p = 0; p < d; ++p)
      for (int pp = 0; pp < d; ++pp)
        for (int q = 0; q < d; ++q)
          for (int qp = 0; qp < d; ++qp) {
            row.push_back(fmt17(k.at(p, pp, q, qp).real()));
            row.push_back(fmt17(k.at(p, pp, q, qp).imag()));
          }
    t.row(std::move(row));
  }
  return t;
}

inline Table resonance_table(const RunConfig& rc) {
  const BornKernel kernel = make_kernel(rc);
  const ResonanceMode mode =
      rc.resonance_mode == "full" ? ResonanceMode::full : ResonanceMode::qp;
  const auto rows = resonance_roots(kernel, mode, rc.sim.root_tol);
  Table t;
  t.columns = {"p", "pp", "re_omega", "im_omega", "residual", "clustered"};
  for (const auto& r : rows)
    t.row({fmt_int(r.p), fmt_int(r.pp), fmt17(r.omega.real()), fmt17(r.omega.imag()),
           fmt17(r.residual), fmt_int(r.clustered ? 1 : 0)});
  return t;
}

inline Table wick_table(const RunConfig& rc) {
  if (rc.bath.ohmic())
    throw ConfigError("wick-check needs a discrete bath (the oracle is a Fock-space sum)");
  const DiscreteModes& modes = rc.bath.as_discrete();
  Table t;
  t.columns = {"max_len", "samples", "max_rel_dev", "fock_dim", "truncation_weight"};
  for (int len = 2; len <= rc.wick.max_len; len += 2) {
    const WickReport rep = verify_wick(modes, rc.bath.beta, rc.wick.n_max, len,
                                       rc.wick.samples_per_len,
                                       rc.sim.seed + static_cast<std::uint64_t>(len));
    t.row({fmt_int(len), fmt_int(rep.samples), fmt17(rep.max_dev), fmt_int(rep.dim),
           fmt17(rep.truncation_weight)});
  }
  return t;
}

inline Table qubit_demo_table(const RunConfig& rc) {
  if (rc.system.dim() != 2) throw ConfigError("qubit-demo needs a two-level system");
  const BornKernel kernel = make_kernel(rc);
  const QubitParams params = derive_qubit_params(kernel);
  const Mat rho0 = initial_state_or_default(rc);
  const Trajectory traj = evolve_markov(kernel.qp_generator().generator, rho0, rc.sim);
  Table t;
  t.columns = {"time",        "max_dev",      "p_ee",        "p_ee_exact",
               "re_coh",      "re_coh_exact", "im_coh",      "im_coh_exact"};
  for (size_t k = 0; k < traj.times.size(); ++k) {
    const Mat exact = qubit_analytic(params, rho0, traj.times[k] - rc.sim.t_start);
    const double dev = (traj.states[k] - exact).cwiseAbs().maxCoeff();
    t.row({fmt17(traj.times[k]), fmt17(dev), fmt17(traj.states[k](0, 0).real()),
           fmt17(exact(0, 0).real()), fmt17(traj.states[k](0, 1).real()),
           fmt17(exact(0, 1).real()), fmt17(traj.states[k](0, 1).imag()),
           fmt17(exact(0, 1).imag())});
  }
  return t;
}

}  // namespace oqs
