#include "doctest.h"

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "potentials.hpp"

using namespace polaron;

namespace {

OracleConfig base_config(int M, double L, double sigma, double amp_v, double amp_w,
                         FlatProfile profile, double lambda, int N, int n_modes, int n_x) {
    OracleConfig cfg;
    cfg.grid = GridSpec(1, M, L);
    cfg.V = (amp_v != 0.0)
                ? build_potential(PotentialSpec::gaussian(amp_v, sigma, PotentialRole::V), cfg.grid)
                : Field(cfg.grid, Space::Position);
    cfg.W = (amp_w != 0.0)
                ? build_potential(PotentialSpec::gaussian(amp_w, sigma, PotentialRole::W), cfg.grid)
                : Field(cfg.grid, Space::Position);
    cfg.profile = profile;
    cfg.params.lambda = lambda;
    cfg.params.n_bosons = N;
    cfg.params.rho = static_cast<double>(N) / lambda;
    cfg.n_modes = n_modes;
    cfg.n_x = n_x;
    return cfg;
}

}  // namespace

TEST_CASE("rotated basis is orthonormal and starts at the condensate") {
    GridSpec g(1, 16, 16.0);
    Field V = build_potential(PotentialSpec::gaussian(0.5, 2.0, PotentialRole::V), g);
    CondensateState st = build_initial_condensate(FlatProfile::flat_exp(2), 2.0, g, V);
    RotatedBasis b = RotatedBasis::build(st.phi, 2.0, 6);
    CHECK(b.unitarity_defect() < 1e-12);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(b.u[0][i] - st.phi.values[i] / std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("gamma_matrix is unitary for unitary frames and matches the fast path") {
    const int n = 3;
    FockBasis basis = FockBasis::truncated(n, 3);
    // random unitary from QR
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist;
    Eigen::MatrixXcd X(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) X(i, j) = Complex{dist(rng), dist(rng)};
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(X);
    Eigen::MatrixXcd Q = qr.householderQ();
    Eigen::MatrixXcd GQ(gamma_matrix(basis, Q, basis));
    const auto d = static_cast<Eigen::Index>(basis.dim());
    CHECK((GQ.adjoint() * GQ - Eigen::MatrixXcd::Identity(d, d)).norm() < 1e-10);

    // diagonal-phase frame hits the monomial fast path; compare against a
    // slightly perturbed run through the permanent path
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(n, n);
    D(0, 0) = std::exp(Complex{0.0, 0.4});
    D(1, 1) = std::exp(Complex{0.0, -0.9});
    D(2, 2) = 1.0;
    Eigen::MatrixXcd GD(gamma_matrix(basis, D, basis));
    Eigen::MatrixXcd Dp = D;
    Dp(0, 1) = 1e-20;  // defeats the monomial detection without changing values
    Eigen::MatrixXcd GDp(gamma_matrix(basis, Dp, basis));
    CHECK((GD - GDp).norm() < 1e-12);
}

TEST_CASE("free microscopic Hamiltonian has exact dispersion sums") {
    OracleConfig cfg = base_config(8, 8.0, 1.0, 0.0, 0.0, FlatProfile::constant(), 2.0, 2, 8, 4);
    CondensateState st = build_initial_condensate(cfg.profile, cfg.params.lambda, cfg.grid, cfg.V);
    RotatedBasis b = RotatedBasis::build(st.phi, cfg.params.lambda, 8);
    auto space = std::make_shared<MicroSpace>();
    space->imp = ImpurityGrid{4, cfg.grid.box_length, 1.0};
    space->sector = FockBasis::sector(8, 2);
    MicroHamiltonian H = build_H_rho(cfg.params, b, cfg.V, cfg.W, space);

    // plane-wave occupation states are eigenstates; bose part is diagonal
    Eigen::MatrixXcd Hb(H.bose_static);
    for (std::size_t s = 0; s < space->sector.dim(); ++s) {
        const auto& occ = space->sector.states[s];
        // basis ordering: u_0 = const (p = 0), then GS plane waves by |p|
        double expect = 0.0;
        for (int k = 0; k < 8; ++k) {
            if (occ[static_cast<std::size_t>(k)] == 0) continue;
            // recover the mode momentum from the basis vector itself
            Field f(cfg.grid, Space::Position, b.u[static_cast<std::size_t>(k)]);
            Field fh = fourier(f, Space::Momentum);
            double p2 = 0.0;
            double best = 0.0;
            for (std::size_t i = 0; i < cfg.grid.size(); ++i)
                if (std::abs(fh.values[i]) > best) {
                    best = std::abs(fh.values[i]);
                    p2 = cfg.grid.momentum_sq(i);
                }
            expect += 0.5 * p2 * occ[static_cast<std::size_t>(k)];
        }
        CHECK(std::abs(Hb(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s)) -
                       Complex{expect, 0.0}) < 1e-10);
    }
}

TEST_CASE("N = 1 microscopic sector against dense two-body diagonalization") {
    OracleConfig cfg = base_config(16, 16.0, 2.0, 0.0, 0.4, FlatProfile::constant(),
                                   1.0, 1, 16, 8);
    CondensateState st = build_initial_condensate(cfg.profile, 1.0, cfg.grid, cfg.V);
    RotatedBasis b = RotatedBasis::build(st.phi, 1.0, 16);
    auto space = std::make_shared<MicroSpace>();
    space->imp = ImpurityGrid{8, cfg.grid.box_length, 1.0};
    space->sector = FockBasis::sector(16, 1);
    MicroHamiltonian H = build_H_rho(cfg.params, b, cfg.V, cfg.W, space);

    // dense two-body Hamiltonian: impurity grid x boson grid (Galerkin-free)
    const int nx = 8;
    const auto Mb = static_cast<Eigen::Index>(cfg.grid.size());
    const Eigen::MatrixXcd kin_b = dense_kinetic_half(cfg.grid);
    Eigen::MatrixXcd kin_x = space->imp.kinetic();
    const Eigen::Index dim = nx * Mb;
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(dim, dim);
    for (int ix = 0; ix < nx; ++ix) {
        full.block(ix * Mb, ix * Mb, Mb, Mb) += kin_b;
        const Field Wx = shift_field(cfg.W, (cfg.grid.points_per_axis / nx) * ix);
        for (Eigen::Index yj = 0; yj < Mb; ++yj)
            full(ix * Mb + yj, ix * Mb + yj) +=
                Wx.values[static_cast<std::size_t>(yj)] / std::sqrt(cfg.params.rho);
    }
    for (int ix = 0; ix < nx; ++ix)
        for (int jx = 0; jx < nx; ++jx)
            for (Eigen::Index yj = 0; yj < Mb; ++yj)
                full(ix * Mb + yj, jx * Mb + yj) += kin_x(ix, jx);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> dense(full);

    CVec v(space->dim());
    std::mt19937_64 rng(3);
    std::normal_distribution<double> dist;
    for (auto& z : v) z = Complex{dist(rng), dist(rng)};
    const double e0 = lanczos_ground_state(H.linop(), v, 40, 80, 1e-10);
    CHECK(e0 == doctest::Approx(dense.eigenvalues()(0)).epsilon(1e-8));
}

TEST_CASE("excitation map bookkeeping and isometry") {
    GridSpec g(1, 8, 8.0);
    Field zeroV(g, Space::Position);
    CondensateState st = build_initial_condensate(FlatProfile::constant(), 2.0, g, zeroV);
    RotatedBasis b = RotatedBasis::build(st.phi, 2.0, 8);
    const int N = 3;
    FockBasis sector = FockBasis::sector(8, N);
    FockBasis exbasis = FockBasis::truncated(8, N);
    Eigen::MatrixXcd U(excitation_map_matrix(b, b, sector, exbasis));

    // pure condensate -> vacuum
    std::vector<std::uint8_t> occ(8, 0);
    occ[0] = N;
    const long pure = sector.index_of(occ);
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(sector.dim()));
    e(pure) = 1.0;
    Eigen::VectorXcd img = U * e;
    std::vector<std::uint8_t> vac(8, 0);
    CHECK(std::abs(img(exbasis.index_of(vac)) - Complex{1.0, 0.0}) < 1e-12);
    CHECK(std::abs(img.norm() - 1.0) < 1e-12);

    // one particle out of the condensate -> single excitation
    occ[0] = N - 1;
    occ[3] = 1;
    e.setZero();
    e(sector.index_of(occ)) = 1.0;
    img = U * e;
    std::vector<std::uint8_t> single(8, 0);
    single[3] = 1;
    CHECK(std::abs(img(exbasis.index_of(single)) - Complex{1.0, 0.0}) < 1e-12);

    // isometry on the sector
    const auto sd = static_cast<Eigen::Index>(sector.dim());
    CHECK((U.adjoint() * U - Eigen::MatrixXcd::Identity(sd, sd)).norm() < 1e-10);
}

TEST_CASE("decomposition identity: trivial case is exact") {
    OracleConfig cfg = base_config(8, 8.0, 1.0, 0.0, 0.0, FlatProfile::constant(), 2.0, 2, 4, 4);
    DecompositionResult r = verify_decomposition(cfg, 0.1, 1e-3, 5, 11);
    CHECK(r.max_residual < 1e-10);
    CHECK(r.map_isometry_defect < 1e-10);
}

TEST_CASE("decomposition identity: tracer terms only") {
    OracleConfig cfg = base_config(16, 16.0, 2.0, 0.0, 0.4, FlatProfile::constant(), 2.0, 2, 6, 8);
    DecompositionResult r = verify_decomposition(cfg, 0.1, 1e-3, 8, 13);
    CHECK(r.max_residual < 1e-6);
}

TEST_CASE("decomposition identity: full interacting case with delta refinement") {
    OracleConfig cfg = base_config(16, 16.0, 2.0, 0.3, 0.4, FlatProfile::flat_exp(2), 2.0, 3, 6, 8);
    cfg.hartree_dt = 2e-4;
    DecompositionResult coarse = verify_decomposition(cfg, 0.1, 2e-3, 8, 17);
    DecompositionResult fine = verify_decomposition(cfg, 0.1, 1e-3, 8, 17);
    CHECK(coarse.max_residual < 1e-5);
    // central differences: residual drops ~4x per delta halving
    CHECK(coarse.max_residual / fine.max_residual > 2.5);
    CHECK(coarse.max_residual / fine.max_residual < 6.0);
}

TEST_CASE("microscopic and effective dynamics coincide in the free case") {
    OracleConfig cfg = base_config(8, 8.0, 1.0, 0.0, 0.0, FlatProfile::constant(), 0.5, 2, 8, 4);
    cfg.params.rho = 4.0;
    ConvergencePoint p = bf_convergence_point(cfg, 0.3, 0.05, 16, false);
    CHECK(p.err_intermediate < 1e-9);
    CHECK(p.err_bf < 1e-9);
}

TEST_CASE("bogoliubov approximation error decreases in rho") {
    // rho sweep at fixed N with the consistent scaling Lambda = N / rho
    std::vector<double> errs;
    const int N = 2;
    for (double rho : {4.0, 8.0, 16.0}) {
        OracleConfig cfg = base_config(16, 8.0, 1.0, 0.2, 0.3, FlatProfile::constant(),
                                       N / rho, N, 16, 4);
        cfg.params.rho = rho;
        ConvergencePoint p = bf_convergence_point(cfg, 0.25, 0.05, 16, false);
        errs.push_back(p.err_intermediate);
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
}
