#include "hartree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polaron {

FlatProfile FlatProfile::constant() { return FlatProfile{Family::Constant, 1, 0.0}; }

FlatProfile FlatProfile::flat_exp(int n_flat) {
    if (n_flat < 1) throw std::invalid_argument("FlatProfile: n_flat >= 1");
    return FlatProfile{Family::FlatExp, n_flat, 0.0};
}

FlatProfile FlatProfile::tilted(double tilt) { return FlatProfile{Family::Tilted, 1, tilt}; }

double FlatProfile::width(int dim) const {
    // int exp(-2 |y/w|^{2n}) dy = w^d * S_{d-1} * Gamma(d/2n) 2^{-d/2n} / (2n)
    const double d = dim;
    const double n = (family == Family::Tilted) ? 1.0 : n_flat;
    const double surface = 2.0 * std::pow(GridSpec::pi(), 0.5 * d) / std::tgamma(0.5 * d);
    const double radial = std::tgamma(d / (2.0 * n)) * std::pow(2.0, -d / (2.0 * n)) / (2.0 * n);
    const double mass = surface * radial;  // for w = 1
    return std::pow(mass, -1.0 / d);
}

Complex FlatProfile::eval(const double* y, int dim) const {
    switch (family) {
        case Family::Constant:
            return Complex{1.0, 0.0};
        case Family::FlatExp: {
            const double w = width(dim);
            double r2 = 0.0;
            for (int a = 0; a < dim; ++a) r2 += (y[a] / w) * (y[a] / w);
            return Complex{std::exp(-std::pow(r2, static_cast<double>(n_flat))), 0.0};
        }
        case Family::Tilted: {
            const double w = width(dim);
            double r2 = 0.0;
            for (int a = 0; a < dim; ++a) r2 += (y[a] / w) * (y[a] / w);
            return Complex{(1.0 + tilt * y[0]) * std::exp(-r2), 0.0};
        }
    }
    return Complex{0.0, 0.0};
}

double hartree_mu(const Field& phi, const Field& V, double lambda) {
    // mu = (1/2 Lambda) int (V*|phi|^2) |phi|^2
    Field density = pointwise(conj(phi), phi);
    Field mean = convolve(V, density);
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < phi.values.size(); ++i)
        acc += mean.values[i] * std::norm(phi.values[i]);
    return 0.5 * (acc.real() * phi.weight()) / lambda;
}

double hartree_energy(const Field& phi, const Field& V) {
    Field ph = fourier(phi, Space::Momentum);
    double kin = 0.0;
    for (std::size_t i = 0; i < ph.values.size(); ++i)
        kin += 0.5 * ph.grid.momentum_sq(i) * std::norm(ph.values[i]);
    kin *= ph.weight();
    Field density = pointwise(conj(phi), phi);
    Field mean = convolve(V, density);
    double pot = 0.0;
    for (std::size_t i = 0; i < phi.values.size(); ++i)
        pot += 0.5 * mean.values[i].real() * std::norm(phi.values[i]);
    pot *= phi.weight();
    return kin + pot;
}

CondensateState build_initial_condensate(const FlatProfile& eta, double lambda,
                                         const GridSpec& grid, const Field& V) {
    // Lambda < 1 is allowed for the constant profile (pure normalization);
    // scaled profiles carry the length scale Lambda^{1/d} and need 1 <= Lambda
    // with the cloud resolvable inside the box.
    if (!(lambda > 0.0)) throw std::invalid_argument("build_initial_condensate: Lambda > 0");
    const double scale = std::pow(lambda, 1.0 / grid.dim);
    if (eta.family != FlatProfile::Family::Constant) {
        if (!(lambda >= 1.0))
            throw std::invalid_argument("build_initial_condensate: Lambda >= 1 for scaled profiles");
        if (scale > grid.box_length / 8.0)
            throw std::invalid_argument("build_initial_condensate: box too small for Lambda^{1/d}");
    }
    Field phi(grid, Space::Position);
    double y[3];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.position(i, y);
        double ys[3];
        for (int a = 0; a < grid.dim; ++a) ys[a] = y[a] / scale;
        phi.values[i] = eta.eval(ys, grid.dim);
    }
    const double norm = phi.norm2();
    if (!(norm > 0.0)) throw std::invalid_argument("build_initial_condensate: empty profile");
    phi *= Complex{std::sqrt(lambda) / norm, 0.0};
    CondensateState st;
    st.phi = std::move(phi);
    st.t = 0.0;
    st.lambda = lambda;
    st.mu = hartree_mu(st.phi, V, lambda);
    return st;
}

ConditionsReport check_conditions(const CondensateState& state, int k, double s) {
    const Field& phi = state.phi;
    const GridSpec& g = phi.grid;
    const double lambda = state.lambda;
    const double inv_d = 1.0 / g.dim;
    if (!(s > 0.0 && s < inv_d))
        throw std::invalid_argument("check_conditions: need 0 < s < 1/d");

    ConditionsReport rep;
    rep.phihat_l1 = fourier(phi, Space::Momentum).norm_p(1.0);

    rep.scaling.columns = {"order", "sup_norm", "l2_norm", "sup_ratio", "l2_ratio"};
    // phi - 1 for flatness margins; derivatives of order >= 1 agree with phi's
    Field shifted = phi;
    for (auto& v : shifted.values) v -= Complex{1.0, 0.0};

    std::vector<double> sup_shift_by_order(static_cast<std::size_t>(k) + 1, 0.0);
    std::vector<Complex> at_origin_by_order(static_cast<std::size_t>(k) + 1, Complex{0.0, 0.0});

    // one representative multi-index per order along axis 0 plus the full set
    // for the sup; orders are small so enumerate all multi-indices.
    std::vector<std::vector<int>> betas;
    {
        std::vector<int> b(g.dim, 0);
        std::function<void(int, int, int)> rec = [&](int axis, int left, int) {
            if (axis == g.dim - 1) {
                b[axis] = left;
                betas.push_back(b);
                return;
            }
            for (int m = 0; m <= left; ++m) {
                b[axis] = m;
                rec(axis + 1, left - m, 0);
            }
        };
        for (int o = 0; o <= k; ++o) rec(0, o, 0);
    }

    const std::size_t origin = 0;  // flat index of x = 0
    std::vector<double> sup_by_order(static_cast<std::size_t>(k) + 1, 0.0);
    std::vector<double> l2_by_order(static_cast<std::size_t>(k) + 1, 0.0);
    for (const auto& beta : betas) {
        int order = 0;
        for (int v : beta) order += v;
        const Field dphi = spectral_derivative(phi, beta);
        sup_by_order[order] = std::max(sup_by_order[order], dphi.norm_inf());
        const double n2 = dphi.norm2();
        l2_by_order[order] = std::max(l2_by_order[order], n2);
        const Field dshift = (order == 0) ? shifted : dphi;
        sup_shift_by_order[order] = std::max(sup_shift_by_order[order], dshift.norm_inf());
        const Complex v0 = dshift.values[origin];
        if (std::abs(v0) > std::abs(at_origin_by_order[order])) at_origin_by_order[order] = v0;
    }
    for (int o = 0; o <= k; ++o) {
        const double sup_expect = std::pow(lambda, -o * inv_d);
        const double l2_expect = std::pow(lambda, 0.5 - o * inv_d);
        rep.scaling.add_row({static_cast<double>(o), sup_by_order[o], l2_by_order[o],
                             sup_by_order[o] / sup_expect, l2_by_order[o] / l2_expect});
    }

    rep.flatness.columns = {"order", "origin_value", "margin_ratio", "flag"};
    for (int o = 0; o <= k - 1; ++o) {
        const double denom_norm = sup_shift_by_order[o];
        const double scale = std::pow(lambda, -(k - o) * (inv_d - s));
        double ratio = 0.0;
        if (denom_norm > 1e-300) ratio = std::abs(at_origin_by_order[o]) / (denom_norm * scale);
        const bool flag = ratio > 1.0;
        if (flag) rep.flat_ok = false;
        rep.flatness.add_row({static_cast<double>(o), std::abs(at_origin_by_order[o]), ratio,
                              flag ? 1.0 : 0.0});
    }
    return rep;
}

namespace {

void kinetic_half_step(Field& phi, double dt) {
    Field ph = fourier(phi, Space::Momentum);
    for (std::size_t i = 0; i < ph.values.size(); ++i) {
        const double w = 0.5 * ph.grid.momentum_sq(i) * dt * 0.5;
        ph.values[i] *= Complex{std::cos(w), -std::sin(w)};
    }
    phi = fourier(ph, Space::Position);
}

void potential_full_step(Field& phi, const Field& V, double mu, double dt) {
    Field density = pointwise(conj(phi), phi);
    Field mean = convolve(V, density);
    for (std::size_t i = 0; i < phi.values.size(); ++i) {
        const double w = (mean.values[i].real() - mu) * dt;
        phi.values[i] *= Complex{std::cos(w), -std::sin(w)};
    }
}

struct RunResult {
    std::vector<double> times;
    std::vector<Field> snaps;
    std::vector<double> mu_t;
    std::vector<double> mu_v;
    Field final;
};

RunResult run_strang(const CondensateState& initial, const Field& V, double t_final, double dt,
                     const std::vector<double>& samples) {
    RunResult r{{}, {}, {}, {}, initial.phi};
    Field phi = initial.phi;
    const double lambda = initial.lambda;
    double t = 0.0;
    r.mu_t.push_back(0.0);
    r.mu_v.push_back(hartree_mu(phi, V, lambda));

    std::vector<double> want = samples;
    std::sort(want.begin(), want.end());

    auto maybe_sample = [&](double tcur, const Field& f) {
        while (!want.empty() && want.front() <= tcur + 1e-12) {
            r.times.push_back(want.front());
            r.snaps.push_back(f);
            want.erase(want.begin());
        }
    };
    maybe_sample(0.0, phi);

    const auto n_steps = static_cast<long>(std::ceil(t_final / dt - 1e-12));
    for (long s = 0; s < n_steps; ++s) {
        const double step = std::min(dt, t_final - t);
        const double mu = hartree_mu(phi, V, lambda);
        kinetic_half_step(phi, step);
        potential_full_step(phi, V, mu, step);
        kinetic_half_step(phi, step);
        t += step;
        r.mu_t.push_back(t);
        r.mu_v.push_back(hartree_mu(phi, V, lambda));
        maybe_sample(t, phi);
    }
    r.final = phi;
    if (!want.empty()) {
        r.times.push_back(t);
        r.snaps.push_back(phi);
    }
    return r;
}

}  // namespace

HartreeTrajectory evolve_hartree(const CondensateState& initial, const Field& V, double t_final,
                                 const HartreeOptions& opts) {
    if (!(t_final >= 0.0)) throw std::invalid_argument("evolve_hartree: t_final >= 0");
    std::vector<double> samples = opts.sample_times;
    samples.push_back(t_final);
    RunResult r = run_strang(initial, V, t_final, opts.dt, samples);

    HartreeTrajectory traj;
    traj.phi0 = initial.phi;
    traj.V = V;
    traj.lambda = initial.lambda;
    traj.times = r.times;
    traj.snapshots = r.snaps;
    traj.mu_times = r.mu_t;
    traj.mu_values = r.mu_v;

    if (opts.check_halving) {
        RunResult rh = run_strang(initial, V, t_final, 0.5 * opts.dt, {});
        // compare modulo the removable global phase (mu frozen at step start
        // contributes a pure phase at first order)
        const Complex overlap = rh.final.inner(r.final);
        const double a = r.final.norm2(), b = rh.final.norm2();
        const double gap2 = std::max(0.0, a * a + b * b - 2.0 * std::abs(overlap));
        traj.halving_error = std::sqrt(gap2) / std::max(1e-300, b);
        if (traj.halving_error > opts.halving_tol)
            throw std::runtime_error("evolve_hartree: step-halving disagreement above tolerance");
    }
    return traj;
}

const Field& HartreeTrajectory::at_time(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) < 1e-9) return snapshots[i];
    throw std::out_of_range("HartreeTrajectory: no snapshot at requested time");
}

double HartreeTrajectory::mu_integral(double t) const {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < mu_times.size(); ++i) {
        const double t0 = mu_times[i], t1 = mu_times[i + 1];
        if (t0 >= t) break;
        const double hi = std::min(t1, t);
        const double w = hi - t0;
        const double m1 = mu_values[i];
        const double m2 = (hi == t1) ? mu_values[i + 1]
                                     : m1 + (mu_values[i + 1] - m1) * (hi - t0) / (t1 - t0);
        acc += 0.5 * (m1 + m2) * w;
    }
    return acc;
}

double HartreeTrajectory::mu_at(double t) const {
    if (t <= mu_times.front()) return mu_values.front();
    for (std::size_t i = 0; i + 1 < mu_times.size(); ++i) {
        if (t <= mu_times[i + 1]) {
            const double a = (t - mu_times[i]) / (mu_times[i + 1] - mu_times[i]);
            return (1.0 - a) * mu_values[i] + a * mu_values[i + 1];
        }
    }
    return mu_values.back();
}

Field auxiliary_phi(const HartreeTrajectory& traj, double t) {
    Field density = pointwise(conj(traj.phi0), traj.phi0);
    Field mean = convolve(traj.V, density);
    const double mu_int = traj.mu_integral(t);
    Field out = traj.phi0;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double w = t * mean.values[i].real() - mu_int;
        out.values[i] *= Complex{std::cos(w), -std::sin(w)};
    }
    return out;
}

Localizer Localizer::make(const GridSpec& grid, double s, int n, double lambda) {
    if (!(s > 0.0 && s < 1.0 / 3.0)) throw std::invalid_argument("Localizer: s in (0, 1/3)");
    if (n < 1) throw std::invalid_argument("Localizer: n >= 1");
    Localizer loc;
    loc.s = s;
    loc.n = n;
    loc.lambda = lambda;
    loc.theta = Field(grid, Space::Position);
    const double scale = std::pow(lambda, -s);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r2 = grid.position_sq(i) * scale * scale;
        loc.theta.values[i] = Complex{1.0 / (1.0 + std::pow(r2, n)), 0.0};
    }
    return loc;
}

Table propagation_diagnostics(const HartreeTrajectory& traj, int k_deriv) {
    Table t;
    t.columns = {"t", "phi_minus_aux_L2", "phi_Linf", "density_shift_1w2"};
    for (int o = 1; o <= k_deriv; ++o)
        t.columns.push_back("d" + std::to_string(o) + "_phi_minus_aux_L2");

    const NormSpec w12 = NormSpec::wedge({1.0, 2.0});
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double time = traj.times[i];
        const Field& phi = traj.snapshots[i];
        const Field aux = auxiliary_phi(traj, time);
        Field diff = phi;
        diff -= aux;
        Field density_shift = pointwise(conj(phi), phi);
        density_shift -= pointwise(conj(traj.phi0), traj.phi0);
        std::vector<double> row = {time, diff.norm2(), phi.norm_inf(),
                                   mixed_norm(density_shift, w12)};
        for (int o = 1; o <= k_deriv; ++o) {
            std::vector<int> beta(phi.grid.dim, 0);
            beta[0] = o;  // axis-0 derivative representative
            row.push_back(spectral_derivative(diff, beta).norm2());
        }
        t.add_row(std::move(row));
    }
    return t;
}

Table local_stability_diagnostics(const HartreeTrajectory& traj, const Field& W,
                                  const Localizer& loc, double rho) {
    Table t;
    t.columns = {"t", "theta_density_shift_1w2", "theta_meanfield_Linf", "meanfield_Linf"};
    const NormSpec w12 = NormSpec::wedge({1.0, 2.0});
    const double sq_rho = std::sqrt(rho);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double time = traj.times[i];
        const Field& phi = traj.snapshots[i];
        Field density_shift = pointwise(conj(phi), phi);
        density_shift -= pointwise(conj(traj.phi0), traj.phi0);
        const double loc_shift = mixed_norm(pointwise(loc.theta, density_shift), w12);

        Field density_minus_one = pointwise(conj(phi), phi);
        for (auto& v : density_minus_one.values) v -= Complex{1.0, 0.0};
        Field mf = convolve(W, density_minus_one);
        mf *= Complex{sq_rho, 0.0};
        const double mf_inf = mf.norm_inf();
        const double loc_mf_inf = pointwise(loc.theta, mf).norm_inf();
        t.add_row({time, loc_shift, loc_mf_inf, mf_inf});
    }
    return t;
}

}  // namespace polaron
