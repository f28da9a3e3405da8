// oracle.hpp — exact small-N dynamics of the microscopic Hamiltonian, the
// excitation map, the remainder operators, and the decomposition/convergence
// experiments behind the effective description.

#pragma once

#include "fock.hpp"

namespace polaron {

// Scaling symbols. rho, lambda and n_bosons may be chosen independently at
// desk scale; the excitation-Hamiltonian identity is exact only when
// N = rho * Lambda, which the experiment drivers enforce per point.
struct ScalingParams {
    double rho = 4.0;
    double lambda = 1.0;
    double alpha = 0.25;  // bookkeeping: Lambda = rho^alpha
    double eps = 0.25;
    double s = 0.2;
    int n_flat = 2;
    int n_bosons = 2;
    double mass = 1.0;

    void validate() const;
};

// Orthonormal single-particle family: u_0 = phi / sqrt(Lambda), then the
// lowest-|p| plane waves (p = 0 skipped, ordered by |p|^2 with axis-lex tie
// break) Gram-Schmidt-orthogonalized against the preceding members.
struct RotatedBasis {
    GridSpec grid;
    std::vector<CVec> u;  // h^d-orthonormal grid vectors

    static RotatedBasis build(const Field& phi, double lambda, int n_modes);

    int count() const { return static_cast<int>(u.size()); }
    Complex inner(int i, const CVec& f) const;  // <u_i, f>
    double unitarity_defect() const;            // max |<u_i,u_j> - delta|

    // <u_i, A u_j> for a grid applier
    Eigen::MatrixXcd compress(const std::function<CVec(const CVec&)>& op) const;
    // overlap G_ij = <this.u_i, other.u_j>
    Eigen::MatrixXcd overlap(const RotatedBasis& other) const;
};

// V_{mnpq} = <u_m (x) u_n, V(y - y') u_p (x) u_q> by FFT quadrature;
// flat row-major tensor over the basis size.
std::vector<Complex> two_body_tensor(const RotatedBasis& basis, const Field& V);

// Gamma(G) between occupation bases by the permanent formula; columns of G
// give the image coordinates of the input modes. Monomially sparse G takes a
// fast path; the result is sparse in that case.
SpMat gamma_matrix(const FockBasis& out_basis, const Eigen::MatrixXcd& G,
                   const FockBasis& in_basis);

// ---------------------------------------------------------------- sector

// impurity (x) exactly-N bosons over the rotated family
struct MicroSpace {
    ImpurityGrid imp;
    FockBasis sector;
    std::size_t dim() const { return static_cast<std::size_t>(imp.n_x) * sector.dim(); }
};

struct MicroHamiltonian {
    std::shared_ptr<const MicroSpace> space;
    Eigen::MatrixXcd kin_x;
    SpMat bose_static;           // dGamma(-Lap/2) + (2 rho)^{-1} V-term
    std::vector<SpMat> w_part;   // per impurity point: rho^{-1/2} dGamma(W_x)

    void apply(const CVec& in, CVec& out) const;
    LinOp linop() const;
};

MicroHamiltonian build_H_rho(const ScalingParams& params, const RotatedBasis& basis,
                             const Field& V, const Field& W,
                             std::shared_ptr<const MicroSpace> space);

// ---------------------------------------------------------- excitation map

// U_t expressed with ambient coordinates B0 (the rotated family at the
// evaluation time): rotate the sector into the B_t frame, drop the condensate
// mode, re-express the excitation modes in B0. Returns the bosonic factor
// (excitation_dim x sector_dim).
SpMat excitation_map_matrix(const RotatedBasis& b0, const RotatedBasis& bt,
                            const FockBasis& sector, const FockBasis& exbasis);

// ------------------------------------------------------------- remainders

struct RemainderSet {
    SpMat r1, r2;
    std::vector<SpMat> r3;          // per impurity point
    std::vector<SpMat> r4;          // per impurity point
    std::vector<double> meanfield;  // rho^{1/2} (W*|phi|^2)(x_i)
};

// R_1..R_4 on the ambient truncated basis (mode 0 = condensate direction;
// the excitation number operator counts modes >= 1).
RemainderSet build_remainders(const ScalingParams& params, const RotatedBasis& b0,
                              const Field& phi, double mu, const Field& V, const Field& W,
                              const ImpurityGrid& imp, const FockBasis& exbasis);

// ------------------------------------------------------------ experiments

struct OracleConfig {
    GridSpec grid;
    Field V, W;
    FlatProfile profile = FlatProfile::constant();
    ScalingParams params;
    int n_modes = 4;   // rotated-family size (<= M^d)
    int n_x = 8;
    double hartree_dt = 1e-3;
};

struct DecompositionResult {
    double max_residual = 0.0;
    double mean_residual = 0.0;
    double map_isometry_defect = 0.0;
};

// Relative residual of
//   U_t H_rho U_t^* + i (dU/dt) U_t^*  =  H^BF(t) + rho^{1/2} W*|phi|^2 - mu + R_N
// on random excitation-supported states; the time derivative uses central
// differences with step delta. Requires t0 >= delta.
DecompositionResult verify_decomposition(const OracleConfig& cfg, double t0, double delta,
                                         int n_states, unsigned seed);

struct ConvergencePoint {
    double rho = 0.0, lambda = 0.0;
    int n_bosons = 0;
    double err_intermediate = 0.0;  // vs xi_t (mean-field term kept)
    double err_bf = 0.0;            // vs psi^BF_t (constant phase extraction)
};

// Head-to-head dynamics: microscopic sector evolution mapped through U_t
// against the effective Fock dynamics, at one scaling point.
ConvergencePoint bf_convergence_point(const OracleConfig& cfg, double t_final, double dt,
                                      int krylov_dim, bool seed_excitation);

}  // namespace polaron
