#include "core/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace polaron {

Field::Field(const GridSpec& g, Space s, CVec v) : grid(g), space(s), values(std::move(v)) {
    if (values.size() != grid.size()) throw std::invalid_argument("Field: value size mismatch");
}

double Field::weight() const {
    double w = 1.0;
    const double step = (space == Space::Position) ? grid.spacing() : grid.momentum_spacing();
    for (int i = 0; i < grid.dim; ++i) w *= step;
    return w;
}

Complex Field::inner(const Field& other) const {
    if (grid != other.grid || space != other.space)
        throw std::invalid_argument("Field::inner: grid/space mismatch");
    Complex s{0.0, 0.0};
    for (std::size_t i = 0; i < values.size(); ++i) s += std::conj(values[i]) * other.values[i];
    return s * weight();
}

double Field::norm2() const {
    double s = 0.0;
    for (const auto& v : values) s += std::norm(v);
    return std::sqrt(s * weight());
}

double Field::norm_inf() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, std::abs(v));
    return m;
}

double Field::norm_p(double p) const {
    if (std::isinf(p)) return norm_inf();
    if (!(p >= 1.0)) throw std::invalid_argument("Field::norm_p: p must be >= 1");
    double s = 0.0;
    for (const auto& v : values) s += std::pow(std::abs(v), p);
    return std::pow(s * weight(), 1.0 / p);
}

Field& Field::operator+=(const Field& o) {
    if (grid != o.grid || space != o.space) throw std::invalid_argument("Field+=: mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    if (grid != o.grid || space != o.space) throw std::invalid_argument("Field-=: mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
}

Field& Field::operator*=(Complex a) {
    for (auto& v : values) v *= a;
    return *this;
}

Field operator+(Field a, const Field& b) { a += b; return a; }
Field operator-(Field a, const Field& b) { a -= b; return a; }
Field operator*(Complex a, Field f) { f *= a; return f; }

Field pointwise(const Field& a, const Field& b) {
    if (a.grid != b.grid || a.space != b.space)
        throw std::invalid_argument("pointwise: grid/space mismatch");
    Field out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= b.values[i];
    return out;
}

Field conj(Field f) {
    for (auto& v : f.values) v = std::conj(v);
    return f;
}

Field fourier(const Field& f, Space direction) {
    if (f.space == direction)
        throw std::invalid_argument("fourier: field already tagged with target space");
    Field out = f;
    const int d = f.grid.dim;
    const double two_pi_pow = std::pow(2.0 * GridSpec::pi(), 0.5 * d);
    if (direction == Space::Momentum) {
        dft_forward(f.grid, out.values);
        const double scale = f.grid.cell_volume() / two_pi_pow;
        for (auto& v : out.values) v *= scale;
    } else {
        dft_backward(f.grid, out.values);
        double dp = 1.0;
        for (int i = 0; i < d; ++i) dp *= f.grid.momentum_spacing();
        const double scale = dp / two_pi_pow;
        for (auto& v : out.values) v *= scale;
    }
    out.space = direction;
    return out;
}

Field convolve(const Field& V, const Field& f) {
    if (V.grid != f.grid) throw std::invalid_argument("convolve: grid mismatch");
    if (V.space != Space::Position || f.space != Space::Position)
        throw std::invalid_argument("convolve: both fields must be in position space");
    Field vh = fourier(V, Space::Momentum);
    Field fh = fourier(f, Space::Momentum);
    const double c = std::pow(2.0 * GridSpec::pi(), 0.5 * V.grid.dim);
    for (std::size_t i = 0; i < vh.values.size(); ++i) vh.values[i] = c * vh.values[i] * fh.values[i];
    return fourier(vh, Space::Position);
}

NormSpec NormSpec::single(double p) { return NormSpec{Kind::Single, {p}}; }
NormSpec NormSpec::sum(std::vector<double> ps) { return NormSpec{Kind::Sum, std::move(ps)}; }
NormSpec NormSpec::wedge(std::vector<double> ps) { return NormSpec{Kind::MinSurrogate, std::move(ps)}; }

double mixed_norm(const Field& f, const NormSpec& spec) {
    if (spec.exponents.empty()) throw std::invalid_argument("mixed_norm: empty spec");
    switch (spec.kind) {
        case NormSpec::Kind::Single:
            return f.norm_p(spec.exponents[0]);
        case NormSpec::Kind::Sum: {
            double s = 0.0;
            for (double p : spec.exponents) s += f.norm_p(p);
            return s;
        }
        case NormSpec::Kind::MinSurrogate: {
            double m = std::numeric_limits<double>::infinity();
            for (double p : spec.exponents) m = std::min(m, f.norm_p(p));
            return m;
        }
    }
    return 0.0;
}

Field spectral_derivative(const Field& f, const std::vector<int>& beta) {
    if (static_cast<int>(beta.size()) != f.grid.dim)
        throw std::invalid_argument("spectral_derivative: multi-index size mismatch");
    Field fh = (f.space == Space::Momentum) ? f : fourier(f, Space::Momentum);
    const GridSpec& g = fh.grid;
    int idx[3];
    for (std::size_t i = 0; i < fh.values.size(); ++i) {
        g.unflatten(i, idx);
        Complex mult{1.0, 0.0};
        for (int a = 0; a < g.dim; ++a) {
            const Complex ip{0.0, g.momentum(idx[a])};
            for (int r = 0; r < beta[a]; ++r) mult *= ip;
        }
        fh.values[i] *= mult;
    }
    return (f.space == Space::Momentum) ? fh : fourier(fh, Space::Position);
}

double parseval_defect(const Field& f) {
    const Field g = fourier(f, f.space == Space::Position ? Space::Momentum : Space::Position);
    const double a = f.norm2(), b = g.norm2();
    return std::abs(a - b) / std::max(1e-300, std::max(a, b));
}

}  // namespace polaron
