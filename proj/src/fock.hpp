// fock.hpp — truncated bosonic Fock spaces over finite mode sets, second
// quantization, the Bogoliubov(-Fröhlich) Hamiltonians, Krylov propagation,
// Bogoliubov unitaries on the truncation, and tracer/polaron observables.

#pragma once

#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>

#include "bogoliubov.hpp"
#include "core/block.hpp"

namespace polaron {

using SpMat = Eigen::SparseMatrix<Complex>;

// ---------------------------------------------------------------- mode sets

// Ordered single-particle momentum modes (grid points, zero mode excluded).
struct ModeSet {
    GridSpec grid;
    std::vector<std::size_t> mode_indices;  // flat momentum indices

    // the +-p pairs of lowest |p|, axis-lex tie break; count must be even
    // unless it exhausts the grid
    static ModeSet lowest_pairs(const GridSpec& g, int count);

    int count() const { return static_cast<int>(mode_indices.size()); }
    double momentum_component(int k, int axis = 0) const;
    double momentum_sq(int k) const;
    Field mode_field(int k) const;  // plane wave e^{ipx} / L^{d/2}, position space
};

// compression <u_i, c u_j>, <u_i, d conj(u_j)> of a grid block operator
struct ModeBlock {
    Eigen::MatrixXcd c, d;
};
ModeBlock project_to_modes(const BlockOp& Z, const ModeSet& modes);

// ------------------------------------------------------------------- basis

// Occupation basis over n_modes modes. Enumeration: grades ascending (total
// occupation 0..n_max, or exactly n_total for sector bases); within a grade,
// the last mode's occupation descends first, recursively (graded reverse-lex,
// ascending). The order is frozen; serialized states rely on it.
struct FockBasis {
    int n_modes = 0;
    int n_max = 0;
    bool fixed_total = false;
    std::vector<std::vector<std::uint8_t>> states;
    std::unordered_map<std::string, std::size_t> lookup;

    static FockBasis truncated(int n_modes, int n_max);
    static FockBasis sector(int n_modes, int n_total);

    std::size_t dim() const { return states.size(); }
    long index_of(const std::vector<std::uint8_t>& occ) const;  // -1 if absent
    int total(std::size_t idx) const;
};

// ------------------------------------------------------- operator assembly

SpMat dGamma(const FockBasis& basis, const Eigen::MatrixXcd& one_body);
SpMat number_op(const FockBasis& basis);
// diagonal in the occupation basis, value = fn(occupations)
SpMat diagonal_op(const FockBasis& basis, const std::function<double(const std::vector<std::uint8_t>&)>& fn);
// (1/2) sum_{mn} B_{mn} a*_m a*_n + h.c.
SpMat pair_quadratic(const FockBasis& basis, const Eigen::MatrixXcd& B);
// sum_k conj(c_k) a_k + c_k a*_k
SpMat linear_coupling(const FockBasis& basis, const Eigen::VectorXcd& coeff);
// (prefac) sum_{mnpq} V4[m,n,p,q] a*_m a*_n a_p a_q  (V4 flat, row-major)
SpMat quartic_op(const FockBasis& basis, const std::vector<Complex>& V4, double prefac);
SpMat annihilator(const FockBasis& basis, int mode);

double hermiticity_residual(const SpMat& H, unsigned seed = 1234);

// ------------------------------------------------------------------ krylov

struct LinOp {
    std::size_t dim = 0;
    std::function<void(const CVec&, CVec&)> apply;
};

LinOp linop_from_sparse(const SpMat& H);

// exp(prefactor * H) v for hermitian H (Lanczos, full reorthogonalization)
CVec krylov_expv(const LinOp& H, const CVec& v, Complex prefactor, int krylov_dim);

// lowest eigenvalue by restarted Lanczos; vec holds the starting / final vector
double lanczos_ground_state(const LinOp& H, CVec& vec, int krylov_dim, int max_restarts,
                            double tol);

// --------------------------------------------------------- polaron spaces

struct ImpurityGrid {
    int n_x = 8;
    double length = 8.0;
    double mass = 1.0;

    double spacing() const { return length / n_x; }
    double coordinate(int i) const;  // signed, wraps to [-L/2, L/2)
    double momentum(int k) const;
    Eigen::MatrixXcd kinetic() const;  // spectral -(1/2m) d^2/dx^2
};

struct PolaronSpace {
    ImpurityGrid imp;
    FockBasis fock;
    std::size_t dim() const { return static_cast<std::size_t>(imp.n_x) * fock.dim(); }
};

struct PolaronState {
    std::shared_ptr<const PolaronSpace> space;
    CVec amp;  // index = ix * fock_dim + jf

    double norm() const;
    void normalize();
};

PolaronState vacuum_with_gaussian_impurity(std::shared_ptr<const PolaronSpace> space,
                                           double impurity_width);

// H = kin_x (x) I + I (x) fock_static + sum_ix |ix><ix| (x) coupling[ix]
//     + diag(potential_x) (x) I
struct PolaronHamiltonian {
    std::shared_ptr<const PolaronSpace> space;
    Eigen::MatrixXcd kin_x;
    SpMat fock_static;
    std::vector<SpMat> coupling;      // per impurity point; empty -> none
    std::vector<double> potential_x;  // per impurity point; empty -> none

    void apply(const CVec& in, CVec& out) const;
    LinOp linop() const;
    double expectation(const PolaronState& psi) const;
};

// Bogoliubov Hamiltonian on the mode set:
//   dGamma(h + K1) + (1/2) sum (K2J)_{mn} a*_m a*_n + h.c.
// with matrix elements compressed from the grid kernels. Throws if the mode
// set fails to exclude the condensate mode.
SpMat build_HBog(const KernelPair& kernels, double mu, const ModeSet& modes,
                 const FockBasis& basis);

// Matrix elements helper: <u_m, (h + K1) u_n> and <u_m, K2J u_n>.
void hbog_mode_matrices(const KernelPair& kernels, double mu, const ModeSet& modes,
                        Eigen::MatrixXcd& one_body, Eigen::MatrixXcd& pair);

enum class BFKind { Finite, Infty };

struct BFAssembly {
    std::shared_ptr<const PolaronSpace> space;
    ModeSet modes;
    PolaronHamiltonian H;
};

// Finite: -Lap_x/2m + a(Q W_x phi) + a*(Q W_x phi) + H^Bog(t).
// Infty:  -Lap_x/2m + a(g_x) + a*(g_x) + dGamma(omega), with
//   g_k(x) = (2 pi / L)^{d/2} sqrt(p^2/(2 omega)) What(p_k) e^{-i p_k x}.
BFAssembly build_HBF_finite(const KernelPair& kernels, double mu, const Field& W,
                            const ModeSet& modes, std::shared_ptr<const PolaronSpace> space);
BFAssembly build_HBF_infty(const Dispersion& disp, const Field& W, const ModeSet& modes,
                           std::shared_ptr<const PolaronSpace> space);

// Transformed-frame generator: -Lap_x/2m + A(Z (V_t)^{-1} (Q W_x phi (+) J .)).
// z_sym may be the identity. Purely linear coupling, no quadratic part.
PolaronHamiltonian transformed_BF_generator(const KernelPair& kernels, const Field& W,
                                            const BlockOp& v_t_inverse, const BlockOp& z_sym,
                                            const ModeSet& modes,
                                            std::shared_ptr<const PolaronSpace> space);

// ------------------------------------------------------------ propagation

struct EvolveOptions {
    double dt = 1e-2;
    int krylov_dim = 24;
    bool record = true;
};

// Krylov propagation with the midpoint-frozen Hamiltonian. Returns per-step
// observables (t, norm, energy, N, x2).
Table time_evolve(const std::function<PolaronHamiltonian(double)>& H_provider, PolaronState& psi,
                  double t_final, const EvolveOptions& opts);

// observables
double expect_number(const PolaronState& psi);
double expect_number_sq_plus(const PolaronState& psi);  // <(N+1)^2>
struct TracerMoments {
    double x2m = 0.0;
    double p2m = 0.0;
    double hoc_m = 0.0;
};
TracerMoments tracer_moments(const PolaronState& psi, int m_pow);

// -------------------------------------------------- Bogoliubov unitaries

struct UnitaryResult {
    double leakage = 0.0;          // norm above the state's N_max in the padded space
    double generator_residual = 0.0;  // non-hermiticity/symmetry defect of the extracted (A, B)
};

// Applies U_Z = e^{iG} for the quadratic generator G obtained from the
// principal log of the doubled mode matrix. Requires defect(Z_modes) <= 1e-8.
// The state is replaced; leakage is measured in a space padded by `pad`.
UnitaryResult implement_bogoliubov_unitary(const ModeBlock& z_modes, const FockBasis& basis,
                                           CVec& amp, int pad = 4, int krylov_dim = 40);

// ----------------------------------------------------------- polaron fiber

// Fiber Hamiltonian H(P) = (P - dGamma(p))^2 / 2m + dGamma(omega) + a(g) + a*(g)
// with g_k = (2 pi / L)^{d/2} sqrt(p_k^2 / (2 omega_k)) What(p_k).
double polaron_fiber_energy(double P, const Dispersion& disp, const Field& W,
                            const ModeSet& modes, int n_max, double mass,
                            double tol = 1e-8);

}  // namespace polaron
