#include "doctest.h"

#include <cmath>
#include <random>

#include "core/block.hpp"
#include "core/field.hpp"
#include "core/field_io.hpp"

#include <sstream>

using namespace polaron;

namespace {

Field random_field(const GridSpec& g, Space s, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    Field f(g, s);
    for (auto& v : f.values) v = Complex{dist(rng), dist(rng)};
    return f;
}

Field gaussian_field(const GridSpec& g, double width) {
    Field f(g, Space::Position);
    for (std::size_t i = 0; i < g.size(); ++i)
        f.values[i] = Complex{std::exp(-g.position_sq(i) / (2.0 * width * width)), 0.0};
    return f;
}

// O(M^{2d}) direct periodic convolution
Field direct_convolution(const Field& V, const Field& f) {
    const GridSpec& g = V.grid;
    Field out(g, Space::Position);
    int ii[3], jj[3], diff[3];
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, ii);
        Complex acc{0.0, 0.0};
        for (std::size_t j = 0; j < g.size(); ++j) {
            g.unflatten(j, jj);
            for (int a = 0; a < g.dim; ++a)
                diff[a] = (ii[a] - jj[a] + g.points_per_axis) % g.points_per_axis;
            acc += V.values[g.flatten(diff)] * f.values[j];
        }
        out.values[i] = acc * g.cell_volume();
    }
    return out;
}

}  // namespace

TEST_CASE("fourier of constant field is a DC spike") {
    GridSpec g(1, 32, 10.0);
    Field one(g, Space::Position);
    for (auto& v : one.values) v = Complex{1.0, 0.0};
    Field oh = fourier(one, Space::Momentum);
    const double expected = std::pow(2.0 * GridSpec::pi(), -0.5) * g.box_length;
    CHECK(std::abs(oh.values[0] - Complex{expected, 0.0}) < 1e-12);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(std::abs(oh.values[i]) < 1e-12);
}

TEST_CASE("fourier of unit gaussian matches continuum transform") {
    // quadrature oracle: (2pi)^{-1/2} int e^{-x^2/2} e^{-ipx} dx = e^{-p^2/2}
    GridSpec g(1, 128, 40.0);
    Field f = gaussian_field(g, 1.0);
    Field fh = fourier(f, Space::Momentum);
    int idx[1];
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx);
        const double p = g.momentum(idx[0]);
        if (std::abs(p) > 6.0) continue;  // interior modes
        CHECK(std::abs(fh.values[i] - Complex{std::exp(-0.5 * p * p), 0.0}) < 1e-8);
    }
}

TEST_CASE("fourier round trip is the identity") {
    GridSpec g(2, 16, 7.0);
    Field f = random_field(g, Space::Position, 11);
    Field back = fourier(fourier(f, Space::Momentum), Space::Position);
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        err = std::max(err, std::abs(back.values[i] - f.values[i]));
    CHECK(err < 1e-12 * f.norm_inf() * 100);
}

TEST_CASE("Parseval holds to 1e-12 relative") {
    for (int d : {1, 2, 3}) {
        GridSpec g(d, 8, 5.0);
        Field f = random_field(g, Space::Position, 5 + static_cast<unsigned>(d));
        CHECK(parseval_defect(f) < 1e-12);
    }
}

TEST_CASE("convolution with the discrete delta is the identity") {
    GridSpec g(1, 32, 8.0);
    Field delta(g, Space::Position);
    delta.values[0] = Complex{1.0 / g.cell_volume(), 0.0};
    Field f = random_field(g, Space::Position, 3);
    Field out = convolve(delta, f);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(out.values[i] - f.values[i]) < 1e-10);
}

TEST_CASE("convolution of even fields is even") {
    GridSpec g(1, 64, 12.0);
    Field V = gaussian_field(g, 1.0);
    Field f = gaussian_field(g, 0.5);
    Field out = convolve(V, f);
    const int M = g.points_per_axis;
    for (int j = 1; j < M; ++j) {
        CHECK(std::abs(out.values[static_cast<std::size_t>(j)] -
                       out.values[static_cast<std::size_t>(M - j)]) < 1e-12);
    }
}

TEST_CASE("gaussian convolution against the direct-sum oracle") {
    GridSpec g(1, 64, 20.0);
    Field a = gaussian_field(g, 0.8);
    Field b = gaussian_field(g, 1.1);
    Field fast = convolve(a, b);
    Field slow = direct_convolution(a, b);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(fast.values[i] - slow.values[i]) < 1e-10);
    // closed form: widths add in quadrature
    const double s2 = 0.8 * 0.8 + 1.1 * 1.1;
    const double amp = std::sqrt(2.0 * GridSpec::pi()) * 0.8 * 1.1 / std::sqrt(s2);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double expect = amp * std::exp(-g.position_sq(i) / (2.0 * s2));
        CHECK(std::abs(fast.values[i].real() - expect) < 1e-8);
    }
}

TEST_CASE("convolution theorem consistency") {
    GridSpec g(1, 32, 9.0);
    Field V = random_field(g, Space::Position, 17);
    Field f = random_field(g, Space::Position, 23);
    Field lhs = fourier(convolve(V, f), Space::Momentum);
    Field vh = fourier(V, Space::Momentum);
    Field fh = fourier(f, Space::Momentum);
    const double c = std::sqrt(2.0 * GridSpec::pi());
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(lhs.values[i] - c * vh.values[i] * fh.values[i]) < 1e-12 * 100);
}

TEST_CASE("mixed norms") {
    GridSpec g(1, 16, 4.0);
    SUBCASE("zero field has zero wedge norm") {
        Field z(g, Space::Position);
        CHECK(mixed_norm(z, NormSpec::wedge({1.0, 2.0})) == 0.0);
    }
    SUBCASE("single-cell indicator: min(h, h^{1/2}) in d=1") {
        Field f(g, Space::Position);
        f.values[3] = Complex{1.0, 0.0};
        const double h = g.spacing();
        CHECK(mixed_norm(f, NormSpec::wedge({1.0, 2.0})) ==
              doctest::Approx(std::min(h, std::sqrt(h))).epsilon(1e-14));
    }
    SUBCASE("sum norm equals componentwise sum") {
        Field f = random_field(g, Space::Position, 9);
        const double direct = f.norm_p(1.0) + f.norm_p(2.0);
        CHECK(mixed_norm(f, NormSpec::sum({1.0, 2.0})) == doctest::Approx(direct).epsilon(1e-14));
    }
}

TEST_CASE("apply_block: identity and S") {
    GridSpec g(1, 16, 6.0);
    DoubledVector F(random_field(g, Space::Position, 1), random_field(g, Space::Position, 2));
    DoubledVector id = apply_block(BlockOp::identity(g), F);
    CHECK((id - F).norm() < 1e-12 * F.norm());
    DoubledVector s = apply_block(BlockOp::s_matrix(g), F);
    CHECK((s.upper - F.upper).norm2() < 1e-12);
    Field neg = F.lower;
    neg *= Complex{-1.0, 0.0};
    CHECK((s.lower - neg).norm2() < 1e-12);
}

TEST_CASE("apply_block dense against explicit doubled matrix-vector oracle") {
    GridSpec g(1, 4, 2.0);
    std::mt19937_64 rng(77);
    std::normal_distribution<double> dist;
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXcd c(n, n), d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            c(i, j) = Complex{dist(rng), dist(rng)};
            d(i, j) = Complex{dist(rng), dist(rng)};
        }
    BlockOp op = BlockOp::dense(g, c, d);
    DoubledVector F(random_field(g, Space::Position, 4), random_field(g, Space::Position, 5));
    DoubledVector out = apply_block(op, F);

    // oracle: w = (f, conj g), W = [[c,d],[conj d, conj c]], w' = W w
    Eigen::VectorXcd w(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        w(i) = F.upper.values[static_cast<std::size_t>(i)];
        w(n + i) = std::conj(F.lower.values[static_cast<std::size_t>(i)]);
    }
    Eigen::MatrixXcd W = assemble_doubled(op);
    Eigen::VectorXcd wp = W * w;
    for (Eigen::Index i = 0; i < n; ++i) {
        CHECK(std::abs(out.upper.values[static_cast<std::size_t>(i)] - wp(i)) < 1e-12);
        CHECK(std::abs(out.lower.values[static_cast<std::size_t>(i)] - std::conj(wp(n + i))) < 1e-12);
    }
}

TEST_CASE("composition of maps equals block-matrix product") {
    GridSpec g(1, 8, 3.0);
    std::mt19937_64 rng(101);
    std::normal_distribution<double> dist;
    const auto n = static_cast<Eigen::Index>(g.size());
    auto rand_op = [&]() {
        Eigen::MatrixXcd c(n, n), d(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                c(i, j) = Complex{dist(rng), dist(rng)};
                d(i, j) = Complex{dist(rng), dist(rng)};
            }
        return BlockOp::dense(g, c, d);
    };
    BlockOp A = rand_op(), B = rand_op();
    const Eigen::MatrixXcd prod = assemble_doubled(A) * assemble_doubled(B);
    const Eigen::MatrixXcd comp = assemble_doubled(compose(A, B));
    CHECK((prod - comp).norm() < 1e-10 * prod.norm());

    DoubledVector F(random_field(g, Space::Position, 8), random_field(g, Space::Position, 9));
    DoubledVector once = apply_block(compose(A, B), F);
    DoubledVector twice = apply_block(A, apply_block(B, F));
    CHECK((once - twice).norm() < 1e-10 * twice.norm());
}

TEST_CASE("symplectic defect values") {
    GridSpec g(1, 8, 3.0);
    const auto n = static_cast<Eigen::Index>(g.size());
    SUBCASE("identity has zero defect") { CHECK(symplectic_defect(BlockOp::identity(g)) < 1e-14); }
    SUBCASE("single-mode squeeze has zero defect") {
        const double r = 0.37;
        Eigen::MatrixXcd c = std::cosh(r) * Eigen::MatrixXcd::Identity(n, n);
        Eigen::MatrixXcd d = std::sinh(r) * Eigen::MatrixXcd::Identity(n, n);
        CHECK(symplectic_defect(BlockOp::dense(g, c, d)) < 1e-12);
    }
    SUBCASE("c = 2 I, b = 0 gives 3 sqrt(2 M^d)") {
        Eigen::MatrixXcd c = 2.0 * Eigen::MatrixXcd::Identity(n, n);
        Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n, n);
        const double expect = 3.0 * std::sqrt(2.0 * static_cast<double>(g.size()));
        CHECK(symplectic_defect(BlockOp::dense(g, c, d)) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("defect of products stays controlled for near-symplectic factors") {
    // regression property, not a theorem: factors with defect <= tol/4 and
    // moderate norms compose to defect <= tol
    GridSpec g(1, 8, 3.0);
    const auto n = static_cast<Eigen::Index>(g.size());
    std::mt19937_64 rng(303);
    std::normal_distribution<double> dist;
    const double tol = 1e-6;
    auto near_symplectic = [&](double r) {
        Eigen::MatrixXcd c = std::cosh(r) * Eigen::MatrixXcd::Identity(n, n);
        Eigen::MatrixXcd d = std::sinh(r) * Eigen::MatrixXcd::Identity(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) c(i, j) += (tol / 256.0) * dist(rng);
        return BlockOp::dense(g, c, d);
    };
    BlockOp Z1 = near_symplectic(0.2), Z2 = near_symplectic(0.1);
    REQUIRE(symplectic_defect(Z1) <= tol / 4);
    REQUIRE(symplectic_defect(Z2) <= tol / 4);
    CHECK(symplectic_defect(compose(Z1, Z2)) <= tol);
}

TEST_CASE("hs_offdiag_norm") {
    GridSpec g(1, 16, 5.0);
    const auto n = static_cast<Eigen::Index>(g.size());
    SUBCASE("identity -> 0") { CHECK(hs_offdiag_norm(BlockOp::identity(g)) == 0.0); }
    SUBCASE("rank-one |u><v| -> ||u|| ||v||") {
        Field u = random_field(g, Space::Position, 21);
        Field v = random_field(g, Space::Position, 22);
        Eigen::VectorXcd ue(n), ve(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            ue(i) = u.values[static_cast<std::size_t>(i)];
            ve(i) = v.values[static_cast<std::size_t>(i)];
        }
        Eigen::MatrixXcd d = g.cell_volume() * ue * ve.adjoint();
        BlockOp op = BlockOp::dense(g, Eigen::MatrixXcd::Identity(n, n), d);
        CHECK(hs_offdiag_norm(op) == doctest::Approx(u.norm2() * v.norm2()).epsilon(1e-12));
    }
    SUBCASE("random dense against entrywise sum oracle") {
        std::mt19937_64 rng(31);
        std::normal_distribution<double> dist;
        Eigen::MatrixXcd d(n, n);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                d(i, j) = Complex{dist(rng), dist(rng)};
                acc += std::norm(d(i, j));
            }
        BlockOp op = BlockOp::dense(g, Eigen::MatrixXcd::Identity(n, n), d);
        CHECK(hs_offdiag_norm(op) == doctest::Approx(std::sqrt(acc)).epsilon(1e-12));
    }
}

TEST_CASE("diag operators match their densified form") {
    GridSpec g(1, 16, 6.0);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> dist;
    CVec c(g.size()), d(g.size());
    int idx[1];
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx);
        // even multipliers (pair p with -p)
        const int k = std::min(idx[0], g.points_per_axis - idx[0]);
        std::mt19937_64 r2(static_cast<unsigned>(k) * 7 + 1);
        std::normal_distribution<double> d2;
        c[i] = Complex{d2(r2), d2(r2)};
        d[i] = Complex{d2(r2), d2(r2)};
    }
    BlockOp diag = BlockOp::diag(g, c, d);
    BlockOp dense = densify(diag);
    DoubledVector F(random_field(g, Space::Position, 41), random_field(g, Space::Position, 42));
    DoubledVector a = apply_block(diag, F);
    DoubledVector b = apply_block(dense, F);
    CHECK((a - b).norm() < 1e-10 * (b.norm() + 1.0));
    CHECK(std::abs(symplectic_defect(diag) - symplectic_defect(dense)) < 1e-8);
}

TEST_CASE("field container round trip") {
    GridSpec g(2, 8, 3.5);
    Field f = random_field(g, Space::Momentum, 99);
    std::stringstream ss;
    write_field(ss, f);
    Field back = read_field(ss);
    REQUIRE(back.grid == g);
    REQUIRE(back.space == Space::Momentum);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(back.values[i] == f.values[i]);
}

TEST_CASE("blockop serialization round trip") {
    GridSpec g(1, 4, 2.0);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> dist;
    const auto n = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXcd c(n, n), d(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            c(i, j) = Complex{dist(rng), dist(rng)};
            d(i, j) = Complex{dist(rng), dist(rng)};
        }
    BlockOp op = BlockOp::dense(g, c, d);
    op.provenance = "test";
    op.timestamp = 1.25;
    save_blockop("/tmp/polaron_test_block.bin", op);
    BlockOp back = load_blockop("/tmp/polaron_test_block.bin");
    CHECK(back.provenance == "test");
    CHECK(back.timestamp == 1.25);
    CHECK((back.c_mat - c).norm() < 1e-15);
    CHECK((back.d_mat - d).norm() < 1e-15);
}
