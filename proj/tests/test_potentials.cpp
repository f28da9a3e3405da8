#include "doctest.h"

#include <cmath>

#include "potentials.hpp"

using namespace polaron;

TEST_CASE("gaussian V transform matches the continuum oracle") {
    GridSpec g(1, 256, 40.0);
    Field V = build_potential(PotentialSpec::gaussian(1.0, 1.0, PotentialRole::V), g);
    Field Vh = fourier(V, Space::Momentum);
    int idx[1];
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx);
        const double p = g.momentum(idx[0]);
        if (std::abs(p) > 6.0) continue;
        CHECK(std::abs(Vh.values[i].real() - std::exp(-0.5 * p * p)) < 1e-8);
        CHECK(std::abs(Vh.values[i].imag()) < 1e-12);
    }
}

TEST_CASE("negative-amplitude gaussian is rejected for role V") {
    GridSpec g(1, 64, 16.0);
    CHECK_THROWS(build_potential(PotentialSpec::gaussian(-1.0, 1.0, PotentialRole::V), g));
    // same family is fine as W
    CHECK_NOTHROW(build_potential(PotentialSpec::gaussian(-1.0, 1.0, PotentialRole::W), g));
}

TEST_CASE("cosine bump is even on the lattice") {
    GridSpec g(1, 64, 16.0);
    Field W = build_potential(PotentialSpec::cosine_bump(0.7, 1.5, PotentialRole::W), g);
    const int M = g.points_per_axis;
    for (int j = 1; j < M; ++j)
        CHECK(W.values[static_cast<std::size_t>(j)] == W.values[static_cast<std::size_t>(M - j)]);
    for (const auto& v : W.values) CHECK(v.imag() == 0.0);
}

TEST_CASE("resolution guards") {
    GridSpec g(1, 32, 32.0);  // h = 1
    CHECK_THROWS(build_potential(PotentialSpec::gaussian(1.0, 1.5, PotentialRole::V), g));  // < 2h
    CHECK_THROWS(build_potential(PotentialSpec::gaussian(1.0, 5.0, PotentialRole::V), g));  // > L/8
    CHECK_NOTHROW(build_potential(PotentialSpec::gaussian(1.0, 2.0, PotentialRole::V), g));
}

TEST_CASE("assumption report") {
    GridSpec g(1, 256, 40.0);
    Field V = build_potential(PotentialSpec::gaussian(1.0, 1.0, PotentialRole::V), g);
    Field W = build_potential(PotentialSpec::gaussian(0.5, 1.2, PotentialRole::W), g);

    SUBCASE("zero potentials give an all-zero table") {
        Field z(g, Space::Position);
        AssumptionReport rep = assumption_report(z, z, 2, 1);
        for (const auto& [k, v] : rep.entries) CHECK(v == 0.0);
    }

    SUBCASE("gaussian moments match the Gamma-function closed form") {
        // odd moments carry the |y|-kink quadrature error h^2 g(0)/6, so the
        // 1e-6 agreement needs a fine 1D grid
        GridSpec gf(1, 16384, 32.0);
        Field Vf = build_potential(PotentialSpec::gaussian(1.0, 1.0, PotentialRole::V), gf);
        Field Wf = build_potential(PotentialSpec::gaussian(0.5, 1.2, PotentialRole::W), gf);
        AssumptionReport rep = assumption_report(Vf, Wf, 4, 1);
        for (int k = 0; k <= 4; ++k) {
            const double expect =
                std::pow(2.0, 0.5 * (k + 1)) * std::tgamma(0.5 * (k + 1));
            CHECK(std::abs(rep.get("absy^" + std::to_string(k) + "_V_L1") - expect) < 1e-6);
        }
    }

    SUBCASE("report is monotone in k_max (prefix property)") {
        AssumptionReport small = assumption_report(V, W, 2, 1);
        AssumptionReport big = assumption_report(V, W, 5, 1);
        for (const auto& [k, v] : small.entries) {
            CHECK(big.entries.count(k) == 1);
            CHECK(big.get(k) == doctest::Approx(v).epsilon(1e-14));
        }
    }

    SUBCASE("all entries are finite") {
        AssumptionReport rep = assumption_report(V, W, 3, 2);
        for (const auto& [k, v] : rep.entries) CHECK(std::isfinite(v));
    }
}
