#include "doctest.h"

#include <cmath>
#include <random>

#include "fock.hpp"
#include "potentials.hpp"

using namespace polaron;

namespace {

Field gaussian_V(const GridSpec& g, double amp = 0.5, double sigma = 1.0) {
    return build_potential(PotentialSpec::gaussian(amp, sigma, PotentialRole::V), g);
}

CVec random_amp(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    CVec v(n);
    for (auto& z : v) z = Complex{dist(rng), dist(rng)};
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    for (auto& z : v) z /= std::sqrt(s);
    return v;
}

}  // namespace

TEST_CASE("occupation basis enumeration is frozen") {
    FockBasis b = FockBasis::truncated(2, 2);
    REQUIRE(b.dim() == 6);
    const std::vector<std::vector<std::uint8_t>> expect = {
        {0, 0}, {0, 1}, {1, 0}, {0, 2}, {1, 1}, {2, 0}};
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(b.states[i] == expect[i]);
    // dim of the truncated space: C(m + N, N)
    FockBasis b2 = FockBasis::truncated(4, 3);
    CHECK(b2.dim() == 35);
    FockBasis s = FockBasis::sector(3, 2);
    CHECK(s.dim() == 6);
    for (std::size_t i = 0; i < s.dim(); ++i) CHECK(s.total(i) == 2);
}

TEST_CASE("dGamma(identity) is the number operator") {
    FockBasis b = FockBasis::truncated(3, 3);
    SpMat N1 = dGamma(b, Eigen::MatrixXcd::Identity(3, 3));
    SpMat N2 = number_op(b);
    CHECK((Eigen::MatrixXcd(N1) - Eigen::MatrixXcd(N2)).norm() < 1e-14);
}

TEST_CASE("dGamma of a diagonal gives single-phonon eigenvalues") {
    FockBasis b = FockBasis::truncated(3, 2);
    Eigen::MatrixXcd om = Eigen::MatrixXcd::Zero(3, 3);
    om(0, 0) = 0.5;
    om(1, 1) = 1.5;
    om(2, 2) = 2.5;
    SpMat H = dGamma(b, om);
    std::vector<std::uint8_t> occ = {0, 1, 0};
    const long idx = b.index_of(occ);
    Eigen::MatrixXcd Hd(H);
    CHECK(Hd(idx, idx) == Complex{1.5, 0.0});
    occ = {1, 0, 1};
    const long idx2 = b.index_of(occ);
    CHECK(Hd(idx2, idx2) == Complex{3.0, 0.0});
}

TEST_CASE("dGamma against the brute-force sum of a*_j a_k") {
    FockBasis b = FockBasis::truncated(3, 3);
    std::mt19937_64 rng(12);
    std::normal_distribution<double> dist;
    Eigen::MatrixXcd A(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) A(i, j) = Complex{dist(rng), dist(rng)};
    SpMat direct = dGamma(b, A);
    Eigen::MatrixXcd brute = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(b.dim()),
                                                    static_cast<Eigen::Index>(b.dim()));
    for (int j = 0; j < 3; ++j) {
        Eigen::MatrixXcd aj(annihilator(b, j));
        for (int k = 0; k < 3; ++k) {
            Eigen::MatrixXcd ak(annihilator(b, k));
            brute += A(j, k) * (aj.adjoint() * ak);
        }
    }
    CHECK((Eigen::MatrixXcd(direct) - brute).norm() < 1e-12);
}

TEST_CASE("pair_quadratic against the brute-force expression") {
    FockBasis b = FockBasis::truncated(3, 4);
    std::mt19937_64 rng(21);
    std::normal_distribution<double> dist;
    Eigen::MatrixXcd B(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            B(i, j) = Complex{dist(rng), dist(rng)};
            B(j, i) = B(i, j);
        }
    SpMat direct = pair_quadratic(b, B);
    Eigen::MatrixXcd brute = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(b.dim()),
                                                    static_cast<Eigen::Index>(b.dim()));
    for (int m = 0; m < 3; ++m) {
        Eigen::MatrixXcd am(annihilator(b, m));
        for (int n = 0; n < 3; ++n) {
            Eigen::MatrixXcd an(annihilator(b, n));
            brute += 0.5 * B(m, n) * (am.adjoint() * an.adjoint());
        }
    }
    brute += brute.adjoint().eval();
    CHECK((Eigen::MatrixXcd(direct) - brute).norm() < 1e-12);
    CHECK(hermiticity_residual(direct) < 1e-12);
}

TEST_CASE("quartic operator against the operator-product oracle") {
    const int m = 3;
    FockBasis b = FockBasis::truncated(m, 3);
    std::mt19937_64 rng(31);
    std::normal_distribution<double> dist;
    std::vector<Complex> V4(static_cast<std::size_t>(m * m * m * m));
    for (auto& v : V4) v = Complex{dist(rng), dist(rng)};
    SpMat direct = quartic_op(b, V4, 0.5);
    Eigen::MatrixXcd brute = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(b.dim()),
                                                    static_cast<Eigen::Index>(b.dim()));
    for (int mm = 0; mm < m; ++mm)
        for (int nn = 0; nn < m; ++nn)
            for (int pp = 0; pp < m; ++pp)
                for (int qq = 0; qq < m; ++qq) {
                    Eigen::MatrixXcd op = Eigen::MatrixXcd(annihilator(b, mm)).adjoint() *
                                          Eigen::MatrixXcd(annihilator(b, nn)).adjoint() *
                                          Eigen::MatrixXcd(annihilator(b, pp)) *
                                          Eigen::MatrixXcd(annihilator(b, qq));
                    brute += 0.5 *
                             V4[static_cast<std::size_t>(((mm * m + nn) * m + pp) * m + qq)] * op;
                }
    CHECK((Eigen::MatrixXcd(direct) - brute).norm() < 1e-11);
}

TEST_CASE("HBog structure") {
    GridSpec g(1, 16, 8.0);
    const double lambda = g.box_length;  // unit density
    ModeSet modes = ModeSet::lowest_pairs(g, 4);
    FockBasis basis = FockBasis::truncated(4, 3);

    SUBCASE("V = 0: block diagonal in particle number, vacuum expectation 0") {
        Field zeroV(g, Space::Position);
        CondensateState st = build_initial_condensate(FlatProfile::constant(), lambda, g, zeroV);
        KernelPair kern = build_kernels(st, zeroV);
        SpMat H = build_HBog(kern, 0.0, modes, basis);
        Eigen::MatrixXcd N(number_op(basis));
        Eigen::MatrixXcd Hd(H);
        CHECK((Hd * N - N * Hd).norm() < 1e-12);
        CHECK(std::abs(Hd(0, 0)) < 1e-13);
    }

    SUBCASE("hermiticity and the short-time number growth law") {
        Field V = gaussian_V(g, 0.5, 1.0);
        CondensateState st = build_initial_condensate(FlatProfile::constant(), lambda, g, V);
        KernelPair kern = build_kernels(st, V);
        SpMat H = build_HBog(kern, st.mu, modes, basis);
        CHECK(hermiticity_residual(H) <= 1e-10);
        Eigen::MatrixXcd Hd(H);
        CHECK(std::abs(Hd(0, 0)) < 1e-12);  // vacuum expectation

        Eigen::MatrixXcd one_body, pair;
        hbog_mode_matrices(kern, st.mu, modes, one_body, pair);
        const double k2f2 = pair.squaredNorm();
        // <N>_t = ||K2_modes||_F^2 t^2 + O(t^4) from the vacuum
        const double t = 1e-2;
        CVec psi(basis.dim(), Complex{0.0, 0.0});
        psi[0] = Complex{1.0, 0.0};
        psi = krylov_expv(linop_from_sparse(H), psi, Complex{0.0, -t}, 30);
        double n_mean = 0.0, nrm = 0.0;
        for (std::size_t s = 0; s < basis.dim(); ++s) {
            n_mean += basis.total(s) * std::norm(psi[s]);
            nrm += std::norm(psi[s]);
        }
        n_mean /= nrm;
        CHECK(n_mean == doctest::Approx(k2f2 * t * t).epsilon(0.05));
    }
}

TEST_CASE("decoupled impurity-phonon evolution has exact phases") {
    GridSpec g(1, 16, 8.0);
    Field zeroW(g, Space::Position);
    Field V = gaussian_V(g, 0.5, 1.0);
    Dispersion disp = Dispersion::from_potential(V);
    ModeSet modes = ModeSet::lowest_pairs(g, 2);
    auto space = std::make_shared<PolaronSpace>();
    space->imp = ImpurityGrid{8, g.box_length, 1.0};
    space->fock = FockBasis::truncated(2, 2);
    BFAssembly bf = build_HBF_infty(disp, zeroW, modes, space);

    // plane-wave impurity (k=1) tensor one phonon in mode 0
    PolaronState psi;
    psi.space = space;
    psi.amp.assign(space->dim(), Complex{0.0, 0.0});
    std::vector<std::uint8_t> occ = {1, 0};
    const long jf = space->fock.index_of(occ);
    const double q = space->imp.momentum(1);
    for (int ix = 0; ix < space->imp.n_x; ++ix) {
        const double x = space->imp.coordinate(ix);
        psi.amp[static_cast<std::size_t>(ix) * space->fock.dim() + static_cast<std::size_t>(jf)] =
            std::exp(Complex{0.0, q * x});
    }
    psi.normalize();
    PolaronState psi0 = psi;

    const double T = 0.3;
    auto provider = [&](double) { return bf.H; };
    time_evolve(provider, psi, T, EvolveOptions{1e-2, 20, false});
    const double omega_k = disp.omega[modes.mode_indices[0]];
    const Complex phase = std::exp(Complex{0.0, -T * (0.5 * q * q / space->imp.mass + omega_k)});
    double err = 0.0;
    for (std::size_t i = 0; i < psi.amp.size(); ++i)
        err = std::max(err, std::abs(psi.amp[i] - phase * psi0.amp[i]));
    CHECK(err < 1e-10);
}

TEST_CASE("finite BF coupling at a constant condensate matches the Fourier oracle") {
    GridSpec g(1, 16, 8.0);
    Field zeroV(g, Space::Position);
    Field W = build_potential(PotentialSpec::gaussian(0.4, 1.0, PotentialRole::W), g);
    const double lambda = 4.0;
    CondensateState st = build_initial_condensate(FlatProfile::constant(), lambda, g, zeroV);
    KernelPair kern = build_kernels(st, zeroV);
    ModeSet modes = ModeSet::lowest_pairs(g, 4);

    const Field Wh = fourier(W, Space::Momentum);
    const double c0 = std::sqrt(lambda / g.box_length);
    for (int k = 0; k < modes.count(); ++k) {
        Field u = modes.mode_field(k);
        for (int cells : {0, 3}) {
            const Field Wx = shift_field(W, cells);
            Field f = pointwise(Wx, st.phi);
            Field qf(g, Space::Position, kern.apply_Q(f.values));
            const Complex got = u.inner(qf);
            const double x = cells * g.spacing();
            const double p = modes.momentum_component(k, 0);
            const Complex expect = c0 * std::sqrt(2.0 * GridSpec::pi()) *
                                   Wh.values[modes.mode_indices[static_cast<std::size_t>(k)]] *
                                   std::exp(Complex{0.0, -p * x}) / std::sqrt(g.box_length);
            CHECK(std::abs(got - expect) < 1e-10);
        }
    }
}

TEST_CASE("energy conservation and hermiticity for the finite BF Hamiltonian") {
    GridSpec g(1, 16, 8.0);
    Field V = gaussian_V(g, 0.5, 1.0);
    Field W = build_potential(PotentialSpec::gaussian(0.4, 1.0, PotentialRole::W), g);
    CondensateState st = build_initial_condensate(FlatProfile::constant(), g.box_length, g, V);
    KernelPair kern = build_kernels(st, V);
    ModeSet modes = ModeSet::lowest_pairs(g, 4);
    auto space = std::make_shared<PolaronSpace>();
    space->imp = ImpurityGrid{8, g.box_length, 1.0};
    space->fock = FockBasis::truncated(4, 3);
    BFAssembly bf = build_HBF_finite(kern, st.mu, W, modes, space);

    // hermiticity of the full handle on random pairs
    std::mt19937_64 rng(3);
    CVec a = random_amp(space->dim(), 1), b = random_amp(space->dim(), 2);
    CVec Ha(a.size()), Hb(b.size());
    bf.H.apply(a, Ha);
    bf.H.apply(b, Hb);
    Complex lhs{0.0, 0.0}, rhs{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) {
        lhs += std::conj(a[i]) * Hb[i];
        rhs += std::conj(Ha[i]) * b[i];
    }
    CHECK(std::abs(lhs - rhs) < 1e-10);

    PolaronState psi = vacuum_with_gaussian_impurity(space, 1.0);
    auto provider = [&](double) { return bf.H; };
    Table tab = time_evolve(provider, psi, 0.5, EvolveOptions{5e-3, 24, true});
    const auto e = tab.column("energy");
    const auto nr = tab.column("norm");
    for (std::size_t i = 0; i < e.size(); ++i) {
        CHECK(std::abs(e[i] - e[0]) < 1e-8 * std::max(1.0, std::abs(e[0])));
        CHECK(std::abs(nr[i] - 1.0) < 1e-9);
    }
}

TEST_CASE("midpoint-frozen stepping is second order for time-dependent H") {
    GridSpec g(1, 16, 8.0);
    Field V = gaussian_V(g, 0.5, 1.0);
    Dispersion disp = Dispersion::from_potential(V);
    ModeSet modes = ModeSet::lowest_pairs(g, 2);
    auto space = std::make_shared<PolaronSpace>();
    space->imp = ImpurityGrid{4, g.box_length, 1.0};
    space->fock = FockBasis::truncated(2, 3);
    Field W = build_potential(PotentialSpec::gaussian(0.4, 1.0, PotentialRole::W), g);
    BFAssembly base = build_HBF_infty(disp, W, modes, space);

    auto provider = [&](double t) {
        PolaronHamiltonian H = base.H;
        // smoothly ramped coupling
        const double ramp = std::sin(2.0 * t);
        for (auto& C : H.coupling) C = C * Complex{ramp, 0.0};
        return H;
    };
    auto run = [&](double dt) {
        PolaronState psi = vacuum_with_gaussian_impurity(space, 1.0);
        time_evolve(provider, psi, 0.4, EvolveOptions{dt, 24, false});
        return psi;
    };
    PolaronState cafe = run(0.04);
    PolaronState half = run(0.02);
    PolaronState fine = run(0.005);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t i = 0; i < fine.amp.size(); ++i) {
        e1 += std::norm(cafe.amp[i] - fine.amp[i]);
        e2 += std::norm(half.amp[i] - fine.amp[i]);
    }
    const double ratio = std::sqrt(e1 / e2);
    CHECK(ratio > 3.0);
    CHECK(ratio < 6.0);
}

TEST_CASE("bogoliubov unitary implements the squeeze") {
    // single momentum pair collapsed to one self-paired mode is not available;
    // use an explicit one-mode basis with a direct (c, d) block
    FockBasis basis = FockBasis::truncated(1, 20);
    const double r = 0.1;
    ModeBlock z;
    z.c = Eigen::MatrixXcd::Constant(1, 1, Complex{std::cosh(r), 0.0});
    z.d = Eigen::MatrixXcd::Constant(1, 1, Complex{std::sinh(r), 0.0});
    CVec amp(basis.dim(), Complex{0.0, 0.0});
    amp[0] = Complex{1.0, 0.0};
    UnitaryResult res = implement_bogoliubov_unitary(z, basis, amp, 6, 60);
    CHECK(res.generator_residual < 1e-12);
    double n_mean = 0.0, nrm = 0.0;
    for (std::size_t s = 0; s < basis.dim(); ++s) {
        n_mean += basis.total(s) * std::norm(amp[s]);
        nrm += std::norm(amp[s]);
    }
    n_mean /= nrm;
    CHECK(std::abs(n_mean - std::sinh(r) * std::sinh(r)) < 1e-6);

    SUBCASE("identity leaves the state unchanged") {
        ModeBlock id;
        id.c = Eigen::MatrixXcd::Identity(1, 1);
        id.d = Eigen::MatrixXcd::Zero(1, 1);
        CVec v = random_amp(basis.dim(), 8);
        CVec v0 = v;
        implement_bogoliubov_unitary(id, basis, v, 4, 40);
        double err = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) err = std::max(err, std::abs(v[i] - v0[i]));
        CHECK(err < 1e-10);
    }

    SUBCASE("leakage decreases monotonically in N_max") {
        double prev = 1e300;
        for (int nmax : {4, 8, 12, 16}) {
            FockBasis bb = FockBasis::truncated(1, nmax);
            CVec v(bb.dim(), Complex{0.0, 0.0});
            v[0] = Complex{1.0, 0.0};
            UnitaryResult rr = implement_bogoliubov_unitary(z, bb, v, 4, 60);
            CHECK(rr.leakage < prev);
            prev = rr.leakage;
        }
    }
}

TEST_CASE("conjugation relation U a(f) U* = a(cf) + a*(d conj f) on two modes") {
    const int m = 2;
    const double r = 0.15;
    ModeBlock z;
    z.c = std::cosh(r) * Eigen::MatrixXcd::Identity(m, m);
    z.d = Eigen::MatrixXcd::Zero(m, m);
    z.d(0, 1) = std::sinh(r);
    z.d(1, 0) = std::sinh(r);
    ModeBlock zinv;
    zinv.c = z.c.adjoint();
    zinv.d = -z.d.transpose();

    std::mt19937_64 rng(17);
    std::normal_distribution<double> dist;
    Eigen::VectorXcd f(m);
    for (int k = 0; k < m; ++k) f(k) = Complex{dist(rng), dist(rng)};

    auto residual_at = [&](int n_max, double& leak_out) {
        FockBasis basis = FockBasis::truncated(m, n_max);
        CVec amp(basis.dim(), Complex{0.0, 0.0});
        std::vector<std::uint8_t> occ = {1, 0};
        amp[static_cast<std::size_t>(basis.index_of(occ))] = Complex{1.0, 0.0};
        occ = {0, 0};
        amp[static_cast<std::size_t>(basis.index_of(occ))] = Complex{0.7, 0.2};

        Eigen::MatrixXcd a_f = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(basis.dim()),
                                                      static_cast<Eigen::Index>(basis.dim()));
        for (int k = 0; k < m; ++k)
            a_f += std::conj(f(k)) * Eigen::MatrixXcd(annihilator(basis, k));

        CVec ua = amp;
        UnitaryResult r1 = implement_bogoliubov_unitary(zinv, basis, ua, 6, 80);  // U* psi
        Eigen::Map<Eigen::VectorXcd> uav(ua.data(), static_cast<Eigen::Index>(ua.size()));
        Eigen::VectorXcd mid = a_f * uav;
        CVec midv(mid.data(), mid.data() + mid.size());
        UnitaryResult r2 = implement_bogoliubov_unitary(z, basis, midv, 6, 80);  // U a(f) U* psi
        leak_out = std::max(r1.leakage, r2.leakage);

        Eigen::VectorXcd cf = z.c * f;
        Eigen::VectorXcd df = z.d * f.conjugate();
        Eigen::MatrixXcd rhs_op = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(basis.dim()),
                                                         static_cast<Eigen::Index>(basis.dim()));
        for (int k = 0; k < m; ++k) {
            rhs_op += std::conj(cf(k)) * Eigen::MatrixXcd(annihilator(basis, k));
            rhs_op += df(k) * Eigen::MatrixXcd(annihilator(basis, k)).adjoint();
        }
        Eigen::Map<const Eigen::VectorXcd> av(amp.data(), static_cast<Eigen::Index>(amp.size()));
        Eigen::VectorXcd rhs = rhs_op * av;
        double err = 0.0;
        for (std::size_t i = 0; i < basis.dim(); ++i)
            err = std::max(err, std::abs(midv[i] - rhs(static_cast<Eigen::Index>(i))));
        return err;
    };

    double prev = 1e300;
    for (int n_max : {6, 10, 14}) {
        double leak = 0.0;
        const double err = residual_at(n_max, leak);
        CHECK(err <= 50.0 * leak + 1e-9);  // leakage-dominated bound
        CHECK(err < prev);                 // monotone in the truncation
        prev = err;
    }
}

TEST_CASE("tracer moments") {
    auto space = std::make_shared<PolaronSpace>();
    space->imp = ImpurityGrid{64, 16.0, 1.0};
    space->fock = FockBasis::truncated(1, 1);

    SUBCASE("gaussian of width 1 has <x^2> = 1/2") {
        PolaronState psi = vacuum_with_gaussian_impurity(space, 1.0);
        TracerMoments tm = tracer_moments(psi, 1);
        CHECK(tm.x2m == doctest::Approx(0.5).epsilon(1e-6));
        CHECK(expect_number_sq_plus(psi) == doctest::Approx(1.0));
    }

    SUBCASE("plane-wave impurity has the box-uniform value L^2/12") {
        PolaronState psi;
        psi.space = space;
        psi.amp.assign(space->dim(), Complex{0.0, 0.0});
        for (int ix = 0; ix < space->imp.n_x; ++ix)
            psi.amp[static_cast<std::size_t>(ix) * space->fock.dim()] = Complex{1.0, 0.0};
        psi.normalize();
        TracerMoments tm = tracer_moments(psi, 1);
        const double L = space->imp.length;
        const double h = space->imp.spacing();
        CHECK(std::abs(tm.x2m - L * L / 12.0) <= h * h);
    }

    SUBCASE("second moments are consistent with squared first on products") {
        PolaronState psi = vacuum_with_gaussian_impurity(space, 1.0);
        TracerMoments tm2 = tracer_moments(psi, 2);
        // gaussian width 1: <x^4> = 3/4
        CHECK(tm2.x2m == doctest::Approx(0.75).epsilon(1e-4));
    }
}

TEST_CASE("polaron fiber energy") {
    GridSpec g(1, 32, 12.0);
    Field V = gaussian_V(g, 0.6, 1.0);
    Field W = build_potential(PotentialSpec::gaussian(0.2, 1.0, PotentialRole::W), g);
    Dispersion disp = Dispersion::from_potential(V);
    ModeSet modes = ModeSet::lowest_pairs(g, 6);

    SUBCASE("free case: E(P) = P^2 / 2m exactly") {
        Field zeroW(g, Space::Position);
        for (double P : {0.0, 0.7}) {
            const double e = polaron_fiber_energy(P, disp, zeroW, modes, 3, 1.0);
            CHECK(e == doctest::Approx(0.5 * P * P).epsilon(1e-9));
        }
    }

    SUBCASE("E(0) decreases as the coupling grows") {
        Field W2 = build_potential(PotentialSpec::gaussian(0.4, 1.0, PotentialRole::W), g);
        const double e1 = polaron_fiber_energy(0.0, disp, W, modes, 4, 1.0);
        const double e2 = polaron_fiber_energy(0.0, disp, W2, modes, 4, 1.0);
        CHECK(e2 < e1);
        CHECK(e1 < 0.0);
    }

    SUBCASE("weak coupling matches second-order perturbation theory within 10%") {
        const double e = polaron_fiber_energy(0.0, disp, W, modes, 4, 1.0);
        const Field Wh = fourier(W, Space::Momentum);
        const double weight2 = 2.0 * GridSpec::pi() / g.box_length;
        double pt = 0.0;
        for (int k = 0; k < modes.count(); ++k) {
            const std::size_t mi = modes.mode_indices[static_cast<std::size_t>(k)];
            const double gk2 = weight2 * disp.tau[mi] * disp.tau[mi] * std::norm(Wh.values[mi]);
            const double p2 = modes.momentum_sq(k);
            pt -= gk2 / (disp.omega[mi] + 0.5 * p2);
        }
        CHECK(std::abs(e - pt) < 0.1 * std::abs(pt));
    }

    SUBCASE("variational monotonicity in N_max and mode count") {
        double prev = 1e300;
        for (int nmax : {1, 2, 3, 4}) {
            const double e = polaron_fiber_energy(0.0, disp, W, modes, nmax, 1.0);
            CHECK(e <= prev + 1e-12);
            prev = e;
        }
        const double e6 = polaron_fiber_energy(0.0, disp, W, modes, 3, 1.0);
        ModeSet more = ModeSet::lowest_pairs(g, 10);
        const double e10 = polaron_fiber_energy(0.0, disp, W, more, 3, 1.0);
        CHECK(e10 <= e6 + 1e-12);
    }
}
