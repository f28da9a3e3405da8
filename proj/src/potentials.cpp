#include "potentials.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace polaron {

PotentialSpec PotentialSpec::gaussian(double amplitude, double sigma, PotentialRole role) {
    if (!(amplitude != 0.0) || !(sigma > 0.0))
        throw std::invalid_argument("gaussian potential: need amplitude != 0, sigma > 0");
    return PotentialSpec{Family::Gaussian, amplitude, sigma, role};
}

PotentialSpec PotentialSpec::cosine_bump(double amplitude, double radius, PotentialRole role) {
    if (!(radius > 0.0)) throw std::invalid_argument("cosine bump: need radius > 0");
    return PotentialSpec{Family::CosineBump, amplitude, radius, role};
}

Field build_potential(const PotentialSpec& spec, const GridSpec& grid) {
    const double h = grid.spacing();
    if (spec.width < 2.0 * h)
        throw std::invalid_argument("build_potential: width not resolved (need >= 2h)");
    if (spec.width > grid.box_length / 8.0)
        throw std::invalid_argument("build_potential: width too large vs box (need <= L/8)");

    Field f(grid, Space::Position);
    const double L = grid.box_length;
    double x[3];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.position(i, x);
        double v = 0.0;
        switch (spec.family) {
            case PotentialSpec::Family::Gaussian: {
                // periodized over wrap images so the transform is exactly the
                // aliased continuum transform (nonnegative for positive amplitude)
                v = spec.amplitude;
                for (int a = 0; a < grid.dim; ++a) {
                    double s = 0.0;
                    for (int n = -3; n <= 3; ++n) {
                        const double xa = x[a] + n * L;
                        s += std::exp(-xa * xa / (2.0 * spec.width * spec.width));
                    }
                    v *= s;
                }
                break;
            }
            case PotentialSpec::Family::CosineBump: {
                double r2 = 0.0;
                for (int a = 0; a < grid.dim; ++a) r2 += x[a] * x[a];
                const double r = std::sqrt(r2);
                if (r < spec.width) {
                    const double c = std::cos(0.5 * GridSpec::pi() * r / spec.width);
                    v = spec.amplitude * c * c;
                }
                break;
            }
        }
        f.values[i] = Complex{v, 0.0};
    }

    if (spec.role == PotentialRole::V) {
        const Field fh = fourier(f, Space::Momentum);
        double min_re = 0.0;
        for (const auto& z : fh.values) min_re = std::min(min_re, z.real());
        if (min_re < -1e-12)
            throw std::invalid_argument("build_potential: Vhat negative beyond tolerance");
        if (!(fh.values[grid.zero_mode_index()].real() > 0.0))
            throw std::invalid_argument("build_potential: Vhat(0) must be positive for role V");
    }
    return f;
}

double AssumptionReport::get(const std::string& key) const {
    auto it = entries.find(key);
    if (it == entries.end()) throw std::out_of_range("AssumptionReport: no entry " + key);
    return it->second;
}

namespace {

Field weight_by_abs_power(const Field& f, int k) {
    Field out = f;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double r = std::sqrt(out.grid.position_sq(i));
        out.values[i] *= std::pow(r, k);
    }
    return out;
}

// central finite-difference d/dx_axis with periodic wrap
Field fd_derivative(const Field& f, int axis) {
    const GridSpec& g = f.grid;
    Field out(g, Space::Position);
    int idx[3];
    const double inv2h = 1.0 / (2.0 * g.spacing());
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx);
        int up[3], dn[3];
        for (int a = 0; a < g.dim; ++a) up[a] = dn[a] = idx[a];
        up[axis] = (idx[axis] + 1) % g.points_per_axis;
        dn[axis] = (idx[axis] + g.points_per_axis - 1) % g.points_per_axis;
        out.values[i] = (f.values[g.flatten(up)] - f.values[g.flatten(dn)]) * inv2h;
    }
    return out;
}

void all_multiindices(int dim, int order, std::vector<std::vector<int>>& out) {
    std::vector<int> beta(dim, 0);
    std::function<void(int, int)> rec = [&](int axis, int left) {
        if (axis == dim - 1) {
            beta[axis] = left;
            out.push_back(beta);
            return;
        }
        for (int k = 0; k <= left; ++k) {
            beta[axis] = k;
            rec(axis + 1, left - k);
        }
    };
    rec(0, order);
}

}  // namespace

AssumptionReport assumption_report(const Field& V, const Field& W, int k_max, int M_reg) {
    if (V.grid != W.grid) throw std::invalid_argument("assumption_report: fields on one grid");
    AssumptionReport rep;

    const Field Vh = fourier(V, Space::Momentum);
    rep.entries["Vhat_L1"] = Vh.norm_p(1.0);
    for (int k = 0; k <= k_max; ++k)
        rep.entries["absy^" + std::to_string(k) + "_V_L1"] = weight_by_abs_power(V, k).norm_p(1.0);
    rep.entries["absy_V_Linf"] = weight_by_abs_power(V, 1).norm_inf();

    double h2 = 0.0;
    std::vector<std::vector<int>> betas;
    for (int o = 0; o <= 2; ++o) all_multiindices(W.grid.dim, o, betas);
    for (const auto& b : betas) {
        const double n = spectral_derivative(W, b).norm2();
        h2 += n * n;
    }
    rep.entries["W_H2"] = std::sqrt(h2);

    for (int k = 0; k <= k_max; ++k)
        rep.entries["absy^" + std::to_string(k) + "_W_Linf"] = weight_by_abs_power(W, k).norm_inf();

    // W^{M,inf} surrogate by iterated central differences
    double wminf = W.norm_inf();
    std::vector<Field> level{W};
    for (int o = 1; o <= M_reg; ++o) {
        std::vector<Field> next;
        for (const auto& f : level)
            for (int axis = 0; axis < W.grid.dim; ++axis) next.push_back(fd_derivative(f, axis));
        for (const auto& f : next) wminf = std::max(wminf, f.norm_inf());
        level = std::move(next);
    }
    rep.entries["W_WMinf_fd"] = wminf;

    // ||(1 + y^2 - Delta)^{1/4} d^b W||_2, reported through the spectral-measure
    // bound <A^{1/2}> <= <A>^{1/2}: ||u||^{1/2} (||u||^2 + ||y u||^2 + ||grad u||^2)^{1/4}.
    betas.clear();
    for (int o = 0; o <= M_reg; ++o) all_multiindices(W.grid.dim, o, betas);
    for (const auto& b : betas) {
        const Field u = spectral_derivative(W, b);
        const double nu = u.norm2();
        double quad = nu * nu;
        quad += weight_by_abs_power(u, 1).norm2() * weight_by_abs_power(u, 1).norm2();
        for (int axis = 0; axis < W.grid.dim; ++axis) {
            std::vector<int> e(W.grid.dim, 0);
            e[axis] = 1;
            const double gn = spectral_derivative(u, e).norm2();
            quad += gn * gn;
        }
        std::string key = "sqrtop_d^(";
        for (std::size_t a = 0; a < b.size(); ++a) key += std::to_string(b[a]) + (a + 1 < b.size() ? "," : "");
        key += ")W_L2";
        rep.entries[key] = std::sqrt(nu) * std::pow(quad, 0.25);
    }
    return rep;
}

}  // namespace polaron
