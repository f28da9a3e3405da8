// block.hpp — the doubled space L^2 (+) J L^2 and 2x2 block operators on it
// (Bogoliubov maps, their generators, and the diagonalizer).
//
// Storage convention. A doubled vector F = f (+) Jg keeps the pair (f, g) in
// position space. With the conjugated coordinates w = (f, conj g) every
// Bogoliubov map is a plain complex matrix
//     [ c  d ; conj(d)  conj(c) ]
// so on stored data a map acts as
//     f' = c f + d conj(g),        g' = c g + d conj(f),
// and a generator [ a  b ; -conj(b)  -conj(a) ] acts as
//     f' = a f + b conj(g),        g' = -a g - b conj(f).
// The creation/annihilation convention implemented by a map (c, d) is
//     U a(h) U* = a(c h) + a*(d conj(h)).
// Diagonal-in-momentum operators hold multipliers c(p), d(p); their action
// couples p with -p through conj(ghat(-p)). All built-in multipliers are even
// in p, for which the per-mode 2x2 picture below is exact.

#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>

#include "core/field.hpp"

namespace polaron {

struct DoubledVector {
    Field upper;  // f
    Field lower;  // stored g, component is Jg

    DoubledVector() = default;
    DoubledVector(Field f, Field g);

    double norm() const;  // sqrt(||f||^2 + ||g||^2)
    DoubledVector& operator-=(const DoubledVector& o);
    DoubledVector& operator+=(const DoubledVector& o);
};

DoubledVector operator-(DoubledVector a, const DoubledVector& b);

struct BlockOp {
    enum class Storage { Dense, DiagMomentum, Applier };
    enum class Form { Map, Generator };

    GridSpec grid;
    Storage storage = Storage::Dense;
    Form form = Form::Map;
    bool is_symplectic_candidate = false;
    bool exclude_zero_mode = false;  // excluded mode acts as a projection
    std::string provenance;
    double timestamp = 0.0;

    // Dense blocks act on raw position-space value arrays.
    Eigen::MatrixXcd c_mat, d_mat;
    // Momentum multipliers, indexed like momentum-space fields.
    CVec c_diag, d_diag;
    // Matrix-free action on stored (f, g) pairs.
    std::function<void(const CVec&, const CVec&, CVec&, CVec&)> applier;

    static BlockOp identity(const GridSpec& g);
    static BlockOp s_matrix(const GridSpec& g);  // S = diag(1, -1)
    static BlockOp dense(const GridSpec& g, Eigen::MatrixXcd c, Eigen::MatrixXcd d,
                         Form form = Form::Map);
    static BlockOp diag(const GridSpec& g, CVec c, CVec d, Form form = Form::Map,
                        bool exclude_zero = false);
    static BlockOp matrix_free(const GridSpec& g,
                               std::function<void(const CVec&, const CVec&, CVec&, CVec&)> fn,
                               Form form = Form::Map);
};

// The 2x2 block action on a doubled vector, J-conjugations resolved.
DoubledVector apply_block(const BlockOp& op, const DoubledVector& F);

// Composition A o B for maps (dense x dense, diag x diag, or mixed via
// densification). The result is a Map-form BlockOp.
BlockOp compose(const BlockOp& A, const BlockOp& B);

// Inverse of a symplectic map via S Z* S (exact for Bogoliubov maps).
BlockOp symplectic_inverse(const BlockOp& Z);

// max Frobenius norm of Z S Z* - S and Z* S Z - S. Dense or diagonal only.
double symplectic_defect(const BlockOp& op);

// Frobenius (Hilbert-Schmidt) norm of the off-diagonal block.
double hs_offdiag_norm(const BlockOp& op);

// Operator norm estimate (largest singular value of the doubled matrix).
double op_norm(const BlockOp& op);

// Dense doubled matrix in w-coordinates; 2*M^d x 2*M^d. Diagonal operators
// are transformed to position space first. Appliers are rejected.
Eigen::MatrixXcd assemble_doubled(const BlockOp& op);

// Convert a diagonal operator to dense blocks (position space).
BlockOp densify(const BlockOp& op);

// Plain-text + Field-container serialization (provenance header, then the
// c and d blocks column by column).
void save_blockop(const std::string& path, const BlockOp& op);
BlockOp load_blockop(const std::string& path);

}  // namespace polaron
