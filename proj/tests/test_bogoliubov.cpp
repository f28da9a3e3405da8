#include "doctest.h"

#include <cmath>
#include <random>

#include "bogoliubov.hpp"
#include "potentials.hpp"

using namespace polaron;

namespace {

Field gaussian_V(const GridSpec& g, double amp = 0.5, double sigma = 1.0) {
    return build_potential(PotentialSpec::gaussian(amp, sigma, PotentialRole::V), g);
}

Field plane_wave(const GridSpec& g, int k_axis0) {
    Field f(g, Space::Position);
    const double p = g.momentum_spacing() * k_axis0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double x[3];
        g.position(i, x);
        f.values[i] = std::exp(Complex{0.0, p * x[0]});
    }
    return f;
}

Field random_field(const GridSpec& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    Field f(g, Space::Position);
    for (auto& v : f.values) v = Complex{dist(rng), dist(rng)};
    return f;
}

Field gaussian_test_function(const GridSpec& g, double width) {
    Field f(g, Space::Position);
    for (std::size_t i = 0; i < g.size(); ++i)
        f.values[i] = Complex{std::exp(-g.position_sq(i) / (2.0 * width * width)), 0.0};
    const double n = f.norm2();
    f *= Complex{1.0 / n, 0.0};
    return f;
}

}  // namespace

TEST_CASE("dispersion identity omega^2 = c^2 - b^2") {
    for (int d : {1, 3}) {
        // keep int V of order one so c - b = p^2/2 is not absorbed into ulp(b)
        GridSpec g(d, d == 1 ? 64 : 16, d == 1 ? 16.0 : 32.0);
        Field V = gaussian_V(g, d == 1 ? 0.7 : 0.005, d == 1 ? 1.0 : 4.0);
        Dispersion disp = Dispersion::from_potential(V);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double lhs = disp.omega[i] * disp.omega[i];
            // stable factored form of c^2 - b^2
            const double rhs = (disp.c[i] - disp.b[i]) * (disp.c[i] + disp.b[i]);
            CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
        }
        CHECK(disp.omega[g.zero_mode_index()] == 0.0);
        CHECK_THROWS(disp.tau_at(g.zero_mode_index()));
    }
}

TEST_CASE("free dispersion: tau = 1 and T = identity") {
    GridSpec g(1, 32, 8.0);
    Field zeroV(g, Space::Position);
    Dispersion disp = Dispersion::from_potential(zeroV);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(disp.tau[i] == doctest::Approx(1.0));
    BlockOp T = diagonalizer_T(disp);
    DoubledVector F(gaussian_test_function(g, 1.0), gaussian_test_function(g, 0.7));
    // zero-mode exclusion acts as a projection; compare against the projected input
    DoubledVector PF = apply_block(BlockOp::diag(g, CVec(g.size(), Complex{1.0, 0.0}),
                                                 CVec(g.size(), Complex{0.0, 0.0}),
                                                 BlockOp::Form::Map, true),
                                   F);
    DoubledVector out = apply_block(T, F);
    CHECK((out - PF).norm() < 1e-12);
}

TEST_CASE("kernels at a constant condensate act as Fourier multipliers") {
    GridSpec g(1, 64, 16.0);
    Field V = gaussian_V(g, 0.8, 1.0);
    const double lambda = 4.0;
    CondensateState st = build_initial_condensate(FlatProfile::constant(), lambda, g, V);
    KernelPair kern = build_kernels(st, V);
    const Field Vh = fourier(V, Space::Momentum);
    const double dens = lambda / g.box_length;  // |phi|^2
    for (int k : {1, 2, 5, -3}) {
        Field pw = plane_wave(g, k);
        CVec out = kern.apply_K1(pw.values);
        const std::size_t mode = (k >= 0) ? static_cast<std::size_t>(k)
                                          : static_cast<std::size_t>(g.points_per_axis + k);
        const Complex mult = std::sqrt(2.0 * GridSpec::pi()) * dens * Vh.values[mode];
        for (std::size_t i = 0; i < g.size(); ++i)
            CHECK(std::abs(out[i] - mult * pw.values[i]) < 1e-10);
    }
}

TEST_CASE("V = 0 kills both kernels") {
    GridSpec g(1, 32, 8.0);
    Field zeroV(g, Space::Position);
    CondensateState st = build_initial_condensate(FlatProfile::constant(), 2.0, g, zeroV);
    KernelPair kern = build_kernels(st, zeroV);
    Field f = random_field(g, 7);
    for (auto v : kern.apply_K1(f.values)) CHECK(std::abs(v) < 1e-14);
    for (auto v : kern.apply_K2J(f.values)) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("K1 is self-adjoint and the positivity identity holds") {
    GridSpec g(1, 16, 16.0);
    Field V = gaussian_V(g, 0.9, 2.0);
    CondensateState st = build_initial_condensate(FlatProfile::flat_exp(1), 2.0, g, V);
    KernelPair kern = build_kernels(st, V);
    Eigen::MatrixXcd K1 = kern.dense_K1();
    CHECK((K1 - K1.adjoint()).norm() <= 1e-10);

    // <psi, K1tilde psi> = <phi^* psi, V*(phi^* psi)> >= 0 when Vhat >= 0
    Eigen::VectorXcd ph(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) ph(static_cast<Eigen::Index>(i)) = st.phi.values[i];
    Eigen::MatrixXcd K1tilde =
        ph.asDiagonal() * dense_convolution_matrix(V) * ph.conjugate().asDiagonal();
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist;
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::VectorXcd psi(static_cast<Eigen::Index>(g.size()));
        for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = Complex{dist(rng), dist(rng)};
        const double q = (psi.adjoint() * (K1tilde * psi))(0).real() * g.cell_volume();
        CHECK(q >= -1e-10);
    }
}

TEST_CASE("generator at V = 0 is the free kinetic block") {
    GridSpec g(1, 16, 8.0);
    Field zeroV(g, Space::Position);
    CondensateState st = build_initial_condensate(FlatProfile::constant(), 2.0, g, zeroV);
    KernelPair kern = build_kernels(st, zeroV);
    BlockOp A = generator_finite(kern, 0.0);
    CHECK(A.form == BlockOp::Form::Generator);
    CHECK((A.c_mat - dense_kinetic_half(g)).norm() < 1e-12);
    CHECK(A.d_mat.norm() < 1e-14);
}

TEST_CASE("generator at a constant condensate matches multipliers on excited modes") {
    GridSpec g(1, 32, 8.0);
    Field V = gaussian_V(g, 0.6, 1.0);
    const double lambda = g.box_length;  // unit density so b(p) matches the dispersion
    CondensateState st = build_initial_condensate(FlatProfile::constant(), lambda, g, V);
    KernelPair kern = build_kernels(st, V);
    BlockOp A = generator_finite(kern, st.mu);
    Dispersion disp = Dispersion::from_potential(V);

    Field pw = plane_wave(g, 3);
    Eigen::VectorXcd pwe(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) pwe(static_cast<Eigen::Index>(i)) = pw.values[i];
    // c-block: h + K1 = p^2/2 + (V*|phi|^2 - mu) + b(p); with |phi|^2 = 1,
    // V*|phi|^2 = int V = 2 mu so the shift is +mu
    Eigen::VectorXcd out = A.c_mat * pwe;
    const Complex expect_c = disp.c[3] + st.mu;
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(out(static_cast<Eigen::Index>(i)) - expect_c * pw.values[i]) < 1e-9);
    // d-block acts on conj(g): feeding g = pw gives -b(p) times the conjugate wave
    Eigen::VectorXcd outd = A.d_mat * pwe.conjugate();
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(outd(static_cast<Eigen::Index>(i)) +
                       Complex{disp.b[3], 0.0} * std::conj(pw.values[i])) < 1e-9);

    SUBCASE("generator preserves the condensate-orthogonal subspace") {
        Eigen::VectorXcd phi(static_cast<Eigen::Index>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i) phi(static_cast<Eigen::Index>(i)) = st.phi.values[i];
        const Complex overlap = (phi.adjoint() * (A.c_mat * pwe))(0) * g.cell_volume();
        CHECK(std::abs(overlap) < 1e-10);
    }
}

TEST_CASE("free Bogoliubov map evolution has exact phases") {
    GridSpec g(1, 16, 8.0);
    Field zeroV(g, Space::Position);
    CondensateState st = build_initial_condensate(FlatProfile::constant(), 2.0, g, zeroV);
    auto provider = finite_generator_provider(st, zeroV, 1e-2);
    EvolveMapOptions opts;
    opts.dt = 1e-3;
    const double T = 0.5;
    BogoliubovPath path = evolve_bogoliubov_map(provider, g, T, opts);
    const BlockOp& VT = path.at_time(T);
    // expected: diag multiplier e^{-i t p^2 / 2}
    Field pw = plane_wave(g, 2);
    DoubledVector F(pw, Field(g, Space::Position));
    DoubledVector out = apply_block(VT, F);
    const double p = 2.0 * g.momentum_spacing();
    const Complex phase = std::exp(Complex{0.0, -T * 0.5 * p * p});
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(out.upper.values[i] - phase * pw.values[i]) < 1e-8);
    CHECK(out.lower.norm2() < 1e-10);
}

TEST_CASE("interacting map: defect stays small and SV*S is a two-sided inverse") {
    GridSpec g(1, 16, 8.0);
    Field V = gaussian_V(g, 0.7, 1.0);
    CondensateState st = build_initial_condensate(FlatProfile::constant(), 4.0, g, V);
    auto provider = finite_generator_provider(st, V, 5e-3);
    EvolveMapOptions opts;
    opts.dt = 1e-3;
    opts.sample_times = {0.25, 0.5};
    BogoliubovPath path = evolve_bogoliubov_map(provider, g, 0.5, opts);
    for (double defect : path.defects) CHECK(defect <= 1e-6);

    const BlockOp& VT = path.at_time(0.5);
    BlockOp inv = symplectic_inverse(VT);
    const Eigen::MatrixXcd prod = assemble_doubled(compose(VT, inv));
    const auto n2 = prod.rows();
    CHECK((prod - Eigen::MatrixXcd::Identity(n2, n2)).norm() < 1e-6);
    const Eigen::MatrixXcd prod2 = assemble_doubled(compose(inv, VT));
    CHECK((prod2 - Eigen::MatrixXcd::Identity(n2, n2)).norm() < 1e-6);
}

TEST_CASE("RK4 order: halving dt shrinks the error ~16x") {
    GridSpec g(1, 16, 16.0);
    Field V = gaussian_V(g, 0.9, 2.0);
    CondensateState st = build_initial_condensate(FlatProfile::constant(), 4.0, g, V);
    auto run = [&](double dt) {
        auto provider = finite_generator_provider(st, V, dt / 4.0);
        EvolveMapOptions opts;
        opts.dt = dt;
        return evolve_bogoliubov_map(provider, g, 0.25, opts).maps.back();
    };
    BlockOp coarse = run(0.04);
    BlockOp mid = run(0.02);
    BlockOp fine = run(0.01);
    const double e1 = (coarse.c_mat - fine.c_mat).norm() + (coarse.d_mat - fine.d_mat).norm();
    const double e2 = (mid.c_mat - fine.c_mat).norm() + (mid.d_mat - fine.d_mat).norm();
    // Richardson: errors vs a 2x finer reference scale ~ (1 - 1/16) vs (1/16 - 1/256)
    CHECK(e1 / e2 > 8.0);
    CHECK(e1 / e2 < 32.0);
}

TEST_CASE("explicit infinite-volume map") {
    GridSpec g(1, 64, 16.0);
    Field V = gaussian_V(g, 0.8, 1.0);
    Dispersion disp = Dispersion::from_potential(V);

    SUBCASE("t = 0 is the identity") {
        BlockOp v0 = v_infty_explicit(disp, 0.0);
        for (std::size_t i = 1; i < g.size(); ++i) {
            CHECK(std::abs(v0.c_diag[i] - Complex{1.0, 0.0}) < 1e-14);
            CHECK(std::abs(v0.d_diag[i]) < 1e-14);
        }
    }

    SUBCASE("free case: L = exp(-i t p^2 / 2), M = 0") {
        Field zeroV(g, Space::Position);
        Dispersion dfree = Dispersion::from_potential(zeroV);
        BlockOp vt = v_infty_explicit(dfree, 0.7);
        for (std::size_t i = 1; i < g.size(); ++i) {
            const double w = 0.5 * g.momentum_sq(i) * 0.7;
            CHECK(std::abs(vt.c_diag[i] - Complex{std::cos(w), -std::sin(w)}) < 1e-12);
            CHECK(std::abs(vt.d_diag[i]) < 1e-14);
        }
    }

    SUBCASE("|L|^2 - |M|^2 = 1 per mode and time") {
        for (double t : {0.1, 0.7, 2.0}) {
            BlockOp vt = v_infty_explicit(disp, t);
            for (std::size_t i = 1; i < g.size(); ++i) {
                const double inv = std::norm(vt.c_diag[i]) - std::norm(vt.d_diag[i]);
                CHECK(std::abs(inv - 1.0) <= 1e-12);
            }
        }
    }

    SUBCASE("finite-difference generator residual is O(delta^2)") {
        auto residual = [&](double delta) {
            const double t = 0.4;
            BlockOp vp = v_infty_explicit(disp, t + delta);
            BlockOp vm = v_infty_explicit(disp, t - delta);
            BlockOp vt = v_infty_explicit(disp, t);
            double worst = 0.0;
            for (std::size_t i = 1; i < g.size(); ++i) {
                const Complex dl = Complex{0.0, 1.0} * (vp.c_diag[i] - vm.c_diag[i]) / (2.0 * delta);
                const Complex dm = Complex{0.0, 1.0} * (vp.d_diag[i] - vm.d_diag[i]) / (2.0 * delta);
                // i dL/dt = c L - b conj(M); i dM/dt = c M - b conj(L)
                const Complex rl = disp.c[i] * vt.c_diag[i] - disp.b[i] * std::conj(vt.d_diag[i]);
                const Complex rm = disp.c[i] * vt.d_diag[i] - disp.b[i] * std::conj(vt.c_diag[i]);
                worst = std::max(worst, std::abs(dl - rl));
                worst = std::max(worst, std::abs(dm - rm));
            }
            return worst;
        };
        const double r1 = residual(1e-2);
        const double r2 = residual(5e-3);
        CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.05));
    }
}

TEST_CASE("diagonalizer conjugates the infinite-volume generator to (omega, -omega)") {
    GridSpec g(1, 16, 8.0);
    Field V = gaussian_V(g, 0.8, 1.0);
    Dispersion disp = Dispersion::from_potential(V);
    BlockOp T = diagonalizer_T(disp);
    CHECK(symplectic_defect(T) <= 1e-10);

    // dense assembly: W_T W_A W_T^{-1} against diag(omega, -omega) in momentum
    const Eigen::MatrixXcd WT = assemble_doubled(T);
    const Eigen::MatrixXcd WA = assemble_doubled(generator_infty(disp));
    const Eigen::MatrixXcd WTi = assemble_doubled(symplectic_inverse(T));
    const Eigen::MatrixXcd conj = WT * WA * WTi;

    CVec om(g.size()), zero(g.size(), Complex{0.0, 0.0});
    for (std::size_t i = 0; i < g.size(); ++i) om[i] = Complex{disp.omega[i], 0.0};
    const Eigen::MatrixXcd WD =
        assemble_doubled(BlockOp::diag(g, om, zero, BlockOp::Form::Generator, true));
    CHECK((conj - WD).norm() <= 1e-10 * std::max(1.0, WD.norm()));
}

TEST_CASE("Z0 construction") {
    GridSpec g(1, 32, 32.0);
    Field V = gaussian_V(g, 0.6, 2.0);

    SUBCASE("V = 0 degenerates to twice the identity") {
        Field zeroV(g, Space::Position);
        CondensateState st = build_initial_condensate(FlatProfile::constant(), 4.0, g, zeroV);
        Z0Result z = build_Z0(st, zeroV, 0.25);
        const auto n = static_cast<Eigen::Index>(g.size());
        CHECK((z.z0.c_mat - 2.0 * Eigen::MatrixXcd::Identity(n, n)).norm() < 1e-10);
        CHECK(z.z0.d_mat.norm() < 1e-10);
        CHECK(z.defect_symplectic < 1e-10);
        CHECK(z.hs_zz_minus_one < 1e-10);
    }

    SUBCASE("interacting case: PSD, symplectic after halving, norms reported") {
        CondensateState st = build_initial_condensate(FlatProfile::flat_exp(2), 4.0, g, V);
        Z0Result z = build_Z0(st, V, 0.25);
        CHECK(z.min_eig_T >= -1e-10);
        CHECK(z.defect_symplectic <= 1e-8);
        CHECK(z.op_norm_half == doctest::Approx(std::pow(1.0 + z.max_eig_T, 0.25)).epsilon(1e-12));
        CHECK(z.hs_zz_minus_one > 0.0);
        // op-norm bound (1 + max eig)^{1/4} against the assembled matrix
        CHECK(op_norm(z.z0_symplectic) <= z.op_norm_half * (1.0 + 1e-8));
    }

    SUBCASE("complex condensate is rejected") {
        CondensateState st = build_initial_condensate(FlatProfile::flat_exp(2), 4.0, g, V);
        for (auto& v : st.phi.values) v *= std::exp(Complex{0.0, 0.3});
        CHECK_THROWS(build_Z0(st, V, 0.25));
    }
}

TEST_CASE("Z0 diagnostics vanish identically in the free constant case") {
    GridSpec g(1, 32, 16.0);
    Field zeroV(g, Space::Position);
    CondensateState st = build_initial_condensate(FlatProfile::constant(), 4.0, g, zeroV);
    Z0Result z = build_Z0(st, zeroV, 0.25);
    Dispersion disp = Dispersion::from_potential(zeroV);
    std::vector<DoubledVector> tests;
    tests.emplace_back(gaussian_test_function(g, 1.0), gaussian_test_function(g, 1.4));
    Z0Diagnostics diag = z0_convergence_diagnostics(z, disp, tests, {1.0, 2.5});
    CHECK(diag.convergence < 1e-10);
    CHECK(diag.commutator < 1e-10);
}

TEST_CASE("interaction vectors") {
    GridSpec g(1, 32, 32.0);
    Field V = gaussian_V(g, 0.6, 2.0);
    Field W = build_potential(PotentialSpec::gaussian(0.5, 2.0, PotentialRole::W), g);
    CondensateState st = build_initial_condensate(FlatProfile::flat_exp(2), 4.0, g, V);
    KernelPair kern = build_kernels(st, V);
    auto provider = finite_generator_provider(st, V, 5e-3);
    EvolveMapOptions opts;
    opts.dt = 2e-3;
    opts.sample_times = {0.0, 0.2};
    BogoliubovPath path = evolve_bogoliubov_map(provider, g, 0.2, opts);

    SUBCASE("t = 0 reduces to the bare coupling vector") {
        DoubledVector F = interaction_vector_finite(path, kern, W, 0.0, 3);
        const Field Wx = shift_field(W, 3);
        Field expect(g, Space::Position, kern.apply_Q(pointwise(Wx, st.phi).values));
        CHECK((F.upper - expect).norm2() < 1e-8);
        CHECK((F.lower - expect).norm2() < 1e-8);
    }

    SUBCASE("W = 0 gives the zero vector") {
        Field zeroW(g, Space::Position);
        DoubledVector F = interaction_vector_finite(path, kern, zeroW, 0.2, 0);
        CHECK(F.norm() < 1e-12);
        Dispersion disp = Dispersion::from_potential(V);
        DoubledVector Fi = interaction_vector_infty(disp, zeroW, 0.2, 0);
        CHECK(Fi.norm() < 1e-12);
    }
}

TEST_CASE("rate bookkeeping gamma") {
    CHECK(rate_bookkeeping_gamma(-1.0, 0.1) ==
          doctest::Approx(std::min(0.1, std::min(1.5 * (1.0 / 3.0 - 0.1), 1.0 / 6.0))));
    CHECK(rate_bookkeeping_gamma(0.05, 0.2) == doctest::Approx(0.05));
}
