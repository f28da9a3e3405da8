// bogoliubov.hpp — Bogoliubov dispersion, the K1/K2 kernels, the finite-volume
// generator and its propagated map, the explicit infinite-volume map, the
// dispersion diagonalizer, and the infrared-regularized reference map Z0.

#pragma once

#include <functional>

#include "core/block.hpp"
#include "experiments/table.hpp"
#include "hartree.hpp"

namespace polaron {

// Per-mode data derived from Vhat:
//   c(p) = p^2/2 + (2 pi)^{d/2} Vhat(p),   b(p) = (2 pi)^{d/2} Vhat(p),
//   omega(p) = sqrt(p^4/4 + p^2 b(p)) = sqrt(c^2 - b^2),
//   tau(p) = sqrt(p^2 / (2 omega(p))) on nonzero modes.
struct Dispersion {
    GridSpec grid;
    std::vector<double> c, b, omega, tau;  // indexed like momentum fields; tau(0) = 0 sentinel

    static Dispersion from_potential(const Field& V_position);
    double tau_at(std::size_t mode) const;  // throws on the zero mode
};

// Appliers for the condensate-sandwiched kernels at a fixed time:
//   K1 f  = Q[ phi (V * (phi^* (Q f))) ]
//   K2J g = Q[ phi (V * (phi (Q g)^*)) ]   (acts antilinearly on g)
struct KernelPair {
    Field phi;
    Field V;
    double lambda = 1.0;
    double t = 0.0;

    CVec apply_Q(const CVec& f) const;
    CVec apply_K1(const CVec& f) const;
    CVec apply_K2J(const CVec& g) const;

    // analytic dense assemblies (position space, raw value arrays)
    Eigen::MatrixXcd dense_Q() const;
    Eigen::MatrixXcd dense_K1() const;
    Eigen::MatrixXcd dense_K2J() const;  // matrix acting on conj(g)
};

KernelPair build_kernels(const CondensateState& state, const Field& V);

// Dense circulant of f -> V*f on raw position arrays.
Eigen::MatrixXcd dense_convolution_matrix(const Field& V);
// Dense spectral kinetic -Lap/2 on raw position arrays.
Eigen::MatrixXcd dense_kinetic_half(const GridSpec& g);

// A^Lambda(t): Generator-form BlockOp with blocks
//   a = h_t + K1,  b = -K2   (h_t = -Lap/2 + V*|phi_t|^2 - mu_t).
BlockOp generator_finite(const KernelPair& kernels, double mu);

struct BogoliubovPath {
    GridSpec grid;
    std::vector<double> times;
    std::vector<BlockOp> maps;      // Map-form, dense
    std::vector<double> defects;    // symplectic defect at each sample
    std::string provenance;

    const BlockOp& at_time(double t) const;
};

struct EvolveMapOptions {
    double dt = 1e-3;
    std::vector<double> sample_times;  // t_final is always sampled
    double defect_fail = 1e-4;         // integration failure threshold
    int defect_check_stride = 50;      // steps between defect measurements
};

// RK4 for i dV/dt = A(t) V, V(0) = I, with dense blocks. A_provider fills the
// generator blocks (a, b) at the requested time. Defect is measured, never
// corrected.
BogoliubovPath evolve_bogoliubov_map(
    const std::function<void(double, Eigen::MatrixXcd&, Eigen::MatrixXcd&)>& A_provider,
    const GridSpec& grid, double t_final, const EvolveMapOptions& opts);

// Stateful provider wiring generator_finite to an internally advanced Hartree
// solution; request times must be nondecreasing (RK4 stage order is).
std::function<void(double, Eigen::MatrixXcd&, Eigen::MatrixXcd&)> finite_generator_provider(
    const CondensateState& initial, const Field& V, double hartree_dt);

// A^infty as a diagonal Generator (a = c(p), b = -b(p)); zero mode excluded.
BlockOp generator_infty(const Dispersion& disp);

// Explicit V_t^infty: diagonal Map with
//   L(p) = cos(omega t) - i c(p) t sinc(omega t),
//   d(p) = i b(p) t sinc(omega t)
// (the paper's M(t) with the reflection/conjugation bookkeeping resolved
// into the doubled storage convention). |L|^2 - |d|^2 = 1 per mode.
BlockOp v_infty_explicit(const Dispersion& disp, double t);

// Diagonalizer of A^infty: diagonal Map with blocks (tau + 1/tau)/2 and
// (tau - 1/tau)/2; zero mode excluded.
BlockOp diagonalizer_T(const Dispersion& disp);
double diagonalizer_offdiag_hs(const Dispersion& disp);  // ||tau - 1/tau||_HS

struct Z0Result {
    BlockOp z0;             // paper-normalized (no 1/2): blocks tau^L +- (tau^L)^-1
    BlockOp z0_symplectic;  // z0 / 2, the actual Bogoliubov map used downstream
    double defect_symplectic = 0.0;  // symplectic defect of z0_symplectic
    double min_eig_T = 0.0;
    double max_eig_T = 0.0;
    double op_norm_half = 0.0;       // ||z0/2||_op
    double hs_zz_minus_one = 0.0;    // ||(z0/2)(z0/2)^* - 1||_HS
};

// Appendix-style construction at t = 0:
//   T^L   = Qhat (p^2 + Lambda^-eps)^{-1/2} K1hat (p^2 + Lambda^-eps)^{-1/2} Qhat
//   tau^L = (1 + T^L)^{-1/4}
// via symmetric eigendecomposition; requires a real-valued condensate.
Z0Result build_Z0(const CondensateState& phi0, const Field& V, double eps);

// Convergence quantities for a Z0 family member against the diagonalizer:
// per test vector F, ||Z0_sym T^{-1} (tau (+) J tau J*) F - (tau (+) J tau J*) F||
// and the translation-commutator sup over the sampled shifts.
struct Z0Diagnostics {
    double convergence = 0.0;   // max over test vectors
    double commutator = 0.0;    // max over test vectors and shifts
};

Z0Diagnostics z0_convergence_diagnostics(const Z0Result& z0, const Dispersion& disp,
                                         const std::vector<DoubledVector>& test_vectors,
                                         const std::vector<double>& x_shifts);

// F^Lambda_x(t) = (V_t^L)^{-1} (Q_t W_x phi_t (+) J Q_t W_x phi_t)
// F^infty_x(t)  = (V_t^inf)^{-1} (W_x (+) J W_x)
// x is a shift along axis 0 in units of whole grid cells.
DoubledVector interaction_vector_finite(const BogoliubovPath& path, const KernelPair& kernels,
                                        const Field& W, double t, long x_cells);
DoubledVector interaction_vector_infty(const Dispersion& disp, const Field& W, double t,
                                       long x_cells);

// Shift a position-space field by x_cells whole cells along an axis.
Field shift_field(const Field& f, long x_cells, int axis = 0);

// Lemma-style infinite-volume deviation quantities at one (t, Lambda) point.
// Columns: t, q_defect, mu_dev, phase_dev, k1_dev, k2_dev, v_dev.
Table convergence_diagnostics_infty(const HartreeTrajectory& traj, const BogoliubovPath& path,
                                    const Dispersion& disp, const Field& test_f,
                                    const std::vector<double>& times);

// gamma = min{delta, s, 3/2 (1/3 - s), 1/6}; pass delta < 0 to drop the term.
double rate_bookkeeping_gamma(double delta, double s);

}  // namespace polaron
