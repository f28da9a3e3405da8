// field.hpp — complex fields on the periodic grid, the symmetric Fourier
// transform, periodic convolution and the norm toolbox.

#pragma once

#include <string>

#include "core/grid.hpp"

namespace polaron {

enum class Space { Position, Momentum };

// Complex-valued function sampled on a GridSpec, tagged with the space it
// currently lives in. All inner products and p-norms carry the quadrature
// weight of the tagged space (h^d in position, (2*pi/L)^d in momentum), so
// values approximate their continuum counterparts.
struct Field {
    GridSpec grid;
    Space space = Space::Position;
    CVec values;

    Field() = default;
    Field(const GridSpec& g, Space s) : grid(g), space(s), values(g.size(), Complex{0.0, 0.0}) {}
    Field(const GridSpec& g, Space s, CVec v);

    double weight() const;  // quadrature weight of the tagged space

    Complex inner(const Field& other) const;  // <this, other>, conjugate-linear in this
    double norm2() const;
    double norm_p(double p) const;   // p-norm as a Riemann sum, p = inf -> max
    double norm_inf() const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(Complex a);
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(Complex a, Field f);

// Pointwise product (same grid and space).
Field pointwise(const Field& a, const Field& b);
Field conj(Field f);

// Symmetric-convention discrete Fourier transform:
//   fhat(p) = (2*pi)^(-d/2) * sum_x f(x) e^{-ipx} h^d
// and its inverse. The input must be tagged with the opposite space.
Field fourier(const Field& f, Space direction);

// Periodic convolution (V * f)(x) = sum_y V(x-y) f(y) h^d, via the Fourier
// identity (V*f)^ = (2*pi)^{d/2} Vhat fhat. Both fields in position space.
Field convolve(const Field& V, const Field& f);

// Norm spec for mixed_norm: a list of exponents combined either as the sum
// norm ||f||_{p1,...,pM} or the splitting-infimum surrogate ||f||_{p1^...^pM}
// (min over the trivial single-term splittings, an upper bound on the
// paper-style infimum).
struct NormSpec {
    enum class Kind { Single, Sum, MinSurrogate };
    Kind kind = Kind::Single;
    std::vector<double> exponents;  // use std::numeric_limits<double>::infinity() for sup

    static NormSpec single(double p);
    static NormSpec sum(std::vector<double> ps);
    static NormSpec wedge(std::vector<double> ps);
};

double mixed_norm(const Field& f, const NormSpec& spec);

// Spectral derivative d^beta f (multi-index over the grid dimension).
Field spectral_derivative(const Field& f, const std::vector<int>& beta);

// Parseval check helper: relative mismatch of ||f||_2 across the transform.
double parseval_defect(const Field& f);

}  // namespace polaron
