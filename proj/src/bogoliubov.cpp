#include "bogoliubov.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace polaron {

namespace {

double two_pi_pow(int d) { return std::pow(2.0 * GridSpec::pi(), 0.5 * d); }

double sinc(double w) {
    if (std::abs(w) < 1e-6) return 1.0 - w * w / 6.0;
    return std::sin(w) / w;
}

Eigen::VectorXcd to_eigen(const CVec& v) {
    Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

}  // namespace

Dispersion Dispersion::from_potential(const Field& V_position) {
    if (V_position.space != Space::Position)
        throw std::invalid_argument("Dispersion: potential must be in position space");
    const GridSpec& g = V_position.grid;
    const Field Vh = fourier(V_position, Space::Momentum);
    const double cpow = two_pi_pow(g.dim);
    Dispersion d;
    d.grid = g;
    d.c.resize(g.size());
    d.b.resize(g.size());
    d.omega.resize(g.size());
    d.tau.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double p2 = g.momentum_sq(i);
        const double bb = cpow * Vh.values[i].real();
        d.b[i] = bb;
        d.c[i] = 0.5 * p2 + bb;
        d.omega[i] = std::sqrt(std::max(0.0, 0.25 * p2 * p2 + p2 * bb));
        d.tau[i] = (p2 > 0.0 && d.omega[i] > 0.0) ? std::sqrt(0.5 * p2 / d.omega[i]) : 0.0;
    }
    return d;
}

double Dispersion::tau_at(std::size_t mode) const {
    if (mode == grid.zero_mode_index())
        throw std::invalid_argument("Dispersion::tau_at: zero mode excluded");
    return tau[mode];
}

KernelPair build_kernels(const CondensateState& state, const Field& V) {
    if (state.phi.grid != V.grid) throw std::invalid_argument("build_kernels: grid mismatch");
    return KernelPair{state.phi, V, state.lambda, state.t};
}

CVec KernelPair::apply_Q(const CVec& f) const {
    Complex overlap{0.0, 0.0};
    for (std::size_t i = 0; i < f.size(); ++i) overlap += std::conj(phi.values[i]) * f[i];
    overlap *= phi.weight() / lambda;
    CVec out = f;
    for (std::size_t i = 0; i < f.size(); ++i) out[i] -= phi.values[i] * overlap;
    return out;
}

CVec KernelPair::apply_K1(const CVec& f) const {
    CVec q = apply_Q(f);
    Field inner(phi.grid, Space::Position);
    for (std::size_t i = 0; i < q.size(); ++i) inner.values[i] = std::conj(phi.values[i]) * q[i];
    Field mean = convolve(V, inner);
    CVec out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = phi.values[i] * mean.values[i];
    return apply_Q(out);
}

CVec KernelPair::apply_K2J(const CVec& g) const {
    CVec q = apply_Q(g);
    Field inner(phi.grid, Space::Position);
    for (std::size_t i = 0; i < q.size(); ++i) inner.values[i] = phi.values[i] * std::conj(q[i]);
    Field mean = convolve(V, inner);
    CVec out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = phi.values[i] * mean.values[i];
    return apply_Q(out);
}

Eigen::MatrixXcd dense_convolution_matrix(const Field& V) {
    const GridSpec& g = V.grid;
    const auto n = static_cast<Eigen::Index>(g.size());
    const double hd = g.cell_volume();
    Eigen::MatrixXcd C(n, n);
    int ii[3], jj[3], diff[3];
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, ii);
        for (std::size_t j = 0; j < g.size(); ++j) {
            g.unflatten(j, jj);
            for (int a = 0; a < g.dim; ++a)
                diff[a] = (ii[a] - jj[a] + g.points_per_axis) % g.points_per_axis;
            C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                V.values[g.flatten(diff)] * hd;
        }
    }
    return C;
}

Eigen::MatrixXcd dense_kinetic_half(const GridSpec& g) {
    CVec c(g.size()), d(g.size(), Complex{0.0, 0.0});
    for (std::size_t i = 0; i < g.size(); ++i) c[i] = Complex{0.5 * g.momentum_sq(i), 0.0};
    return densify(BlockOp::diag(g, std::move(c), std::move(d))).c_mat;
}

Eigen::MatrixXcd KernelPair::dense_Q() const {
    const auto n = static_cast<Eigen::Index>(phi.grid.size());
    Eigen::VectorXcd ph = to_eigen(phi.values);
    Eigen::MatrixXcd Q = Eigen::MatrixXcd::Identity(n, n);
    Q.noalias() -= (phi.weight() / lambda) * ph * ph.adjoint();
    return Q;
}

Eigen::MatrixXcd KernelPair::dense_K1() const {
    const Eigen::MatrixXcd Q = dense_Q();
    const Eigen::MatrixXcd C = dense_convolution_matrix(V);
    Eigen::VectorXcd ph = to_eigen(phi.values);
    Eigen::MatrixXcd K = ph.asDiagonal() * C * ph.conjugate().asDiagonal();
    return Q * K * Q;
}

Eigen::MatrixXcd KernelPair::dense_K2J() const {
    const Eigen::MatrixXcd Q = dense_Q();
    const Eigen::MatrixXcd C = dense_convolution_matrix(V);
    Eigen::VectorXcd ph = to_eigen(phi.values);
    Eigen::MatrixXcd K = ph.asDiagonal() * C * ph.asDiagonal();
    return Q * K * Q.conjugate();
}

BlockOp generator_finite(const KernelPair& kernels, double mu) {
    const GridSpec& g = kernels.phi.grid;
    if (2 * g.size() > 2048)
        throw std::invalid_argument("generator_finite: dense assembly cap 2 M^d <= 2048 exceeded");
    Eigen::MatrixXcd a = dense_kinetic_half(g);
    Field density = pointwise(conj(kernels.phi), kernels.phi);
    Field mean = convolve(kernels.V, density);
    for (std::size_t i = 0; i < g.size(); ++i)
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += mean.values[i].real() - mu;
    a += kernels.dense_K1();
    Eigen::MatrixXcd beta = -kernels.dense_K2J();
    BlockOp op = BlockOp::dense(g, std::move(a), std::move(beta), BlockOp::Form::Generator);
    op.provenance = "A_finite";
    op.timestamp = kernels.t;
    return op;
}

const BlockOp& BogoliubovPath::at_time(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) < 1e-9) return maps[i];
    throw std::out_of_range("BogoliubovPath: no sample at requested time");
}

BogoliubovPath evolve_bogoliubov_map(
    const std::function<void(double, Eigen::MatrixXcd&, Eigen::MatrixXcd&)>& A_provider,
    const GridSpec& grid, double t_final, const EvolveMapOptions& opts) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(n, n);

    BogoliubovPath path;
    path.grid = grid;
    path.provenance = "V_finite";

    std::vector<double> want = opts.sample_times;
    want.push_back(t_final);
    std::sort(want.begin(), want.end());
    want.erase(std::unique(want.begin(), want.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               want.end());

    auto sample = [&](double t) {
        BlockOp op = BlockOp::dense(grid, C, D);
        op.is_symplectic_candidate = true;
        op.provenance = path.provenance;
        op.timestamp = t;
        const double defect = symplectic_defect(op);
        if (defect > opts.defect_fail)
            throw std::runtime_error("evolve_bogoliubov_map: symplectic defect above failure bound");
        path.times.push_back(t);
        path.maps.push_back(std::move(op));
        path.defects.push_back(defect);
    };

    const Complex mi{0.0, -1.0};
    Eigen::MatrixXcd a(n, n), b(n, n);
    Eigen::MatrixXcd kc1, kd1, kc2, kd2, kc3, kd3, kc4, kd4, Ct, Dt;

    auto deriv = [&](const Eigen::MatrixXcd& Cin, const Eigen::MatrixXcd& Din,
                     Eigen::MatrixXcd& dC, Eigen::MatrixXcd& dD) {
        dC = mi * (a * Cin + b * Din.conjugate());
        dD = mi * (a * Din + b * Cin.conjugate());
    };

    double t = 0.0;
    auto pending = want.begin();
    while (pending != want.end() && *pending <= 1e-12) {
        sample(0.0);
        ++pending;
    }

    long step_count = 0;
    while (pending != want.end()) {
        const double target = *pending;
        const long n_steps = std::max<long>(1, std::lround((target - t) / opts.dt));
        const double h = (target - t) / static_cast<double>(n_steps);
        for (long s = 0; s < n_steps; ++s) {
            A_provider(t, a, b);
            deriv(C, D, kc1, kd1);
            A_provider(t + 0.5 * h, a, b);
            Ct = C + 0.5 * h * kc1;
            Dt = D + 0.5 * h * kd1;
            deriv(Ct, Dt, kc2, kd2);
            Ct = C + 0.5 * h * kc2;
            Dt = D + 0.5 * h * kd2;
            deriv(Ct, Dt, kc3, kd3);
            A_provider(t + h, a, b);
            Ct = C + h * kc3;
            Dt = D + h * kd3;
            deriv(Ct, Dt, kc4, kd4);
            C += (h / 6.0) * (kc1 + 2.0 * kc2 + 2.0 * kc3 + kc4);
            D += (h / 6.0) * (kd1 + 2.0 * kd2 + 2.0 * kd3 + kd4);
            t += h;
            ++step_count;
            if (opts.defect_check_stride > 0 && step_count % opts.defect_check_stride == 0) {
                BlockOp probe = BlockOp::dense(grid, C, D);
                if (symplectic_defect(probe) > opts.defect_fail)
                    throw std::runtime_error(
                        "evolve_bogoliubov_map: symplectic defect above failure bound");
            }
        }
        t = target;
        sample(t);
        ++pending;
    }
    return path;
}

std::function<void(double, Eigen::MatrixXcd&, Eigen::MatrixXcd&)> finite_generator_provider(
    const CondensateState& initial, const Field& V, double hartree_dt) {
    // stateful: advances its own Hartree solution to each requested time
    auto state = std::make_shared<CondensateState>(initial);
    auto vcopy = std::make_shared<Field>(V);
    const double dt = hartree_dt;
    return [state, vcopy, dt](double t, Eigen::MatrixXcd& a, Eigen::MatrixXcd& b) {
        if (t < state->t - 1e-12)
            throw std::invalid_argument("finite_generator_provider: times must be nondecreasing");
        if (t > state->t + 1e-12) {
            HartreeOptions opts;
            const double span = t - state->t;
            const long n = std::max<long>(1, std::lround(std::ceil(span / dt)));
            opts.dt = span / static_cast<double>(n);
            HartreeTrajectory seg = evolve_hartree(*state, *vcopy, span, opts);
            state->phi = seg.snapshots.back();
            state->t = t;
        }
        state->mu = hartree_mu(state->phi, *vcopy, state->lambda);
        KernelPair k = build_kernels(*state, *vcopy);
        BlockOp gen = generator_finite(k, state->mu);
        a = std::move(gen.c_mat);
        b = std::move(gen.d_mat);
    };
}

BlockOp generator_infty(const Dispersion& disp) {
    const GridSpec& g = disp.grid;
    CVec c(g.size()), d(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        c[i] = Complex{disp.c[i], 0.0};
        d[i] = Complex{-disp.b[i], 0.0};
    }
    BlockOp op = BlockOp::diag(g, std::move(c), std::move(d), BlockOp::Form::Generator, true);
    op.provenance = "A_infty";
    return op;
}

BlockOp v_infty_explicit(const Dispersion& disp, double t) {
    const GridSpec& g = disp.grid;
    CVec L(g.size()), M(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double w = disp.omega[i] * t;
        const double s = t * sinc(w);
        L[i] = Complex{std::cos(w), -disp.c[i] * s};
        M[i] = Complex{0.0, disp.b[i] * s};
    }
    BlockOp op = BlockOp::diag(g, std::move(L), std::move(M), BlockOp::Form::Map, true);
    op.is_symplectic_candidate = true;
    op.provenance = "V_infty";
    op.timestamp = t;
    return op;
}

BlockOp diagonalizer_T(const Dispersion& disp) {
    const GridSpec& g = disp.grid;
    CVec u(g.size()), v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (i == g.zero_mode_index()) {
            u[i] = Complex{1.0, 0.0};
            v[i] = Complex{0.0, 0.0};
            continue;
        }
        if (!(disp.tau[i] > 0.0))
            throw std::invalid_argument("diagonalizer_T: Vhat < 0 mode encountered");
        const double tau = disp.tau[i];
        u[i] = Complex{0.5 * (tau + 1.0 / tau), 0.0};
        v[i] = Complex{0.5 * (tau - 1.0 / tau), 0.0};
    }
    BlockOp op = BlockOp::diag(g, std::move(u), std::move(v), BlockOp::Form::Map, true);
    op.is_symplectic_candidate = true;
    op.provenance = "T_diagonalizer";
    return op;
}

double diagonalizer_offdiag_hs(const Dispersion& disp) {
    double s = 0.0;
    for (std::size_t i = 0; i < disp.grid.size(); ++i) {
        if (i == disp.grid.zero_mode_index()) continue;
        const double tau = disp.tau[i];
        const double v = tau - 1.0 / tau;
        s += v * v;
    }
    return std::sqrt(s);
}

Z0Result build_Z0(const CondensateState& phi0, const Field& V, double eps) {
    const GridSpec& g = phi0.phi.grid;
    if (2 * g.size() > 2048)
        throw std::invalid_argument("build_Z0: dense assembly cap 2 M^d <= 2048 exceeded");
    double max_im = 0.0, max_abs = 0.0;
    for (const auto& z : phi0.phi.values) {
        max_im = std::max(max_im, std::abs(z.imag()));
        max_abs = std::max(max_abs, std::abs(z));
    }
    if (max_im > 1e-10 * std::max(1.0, max_abs))
        throw std::invalid_argument("build_Z0: condensate must be real-valued");

    const double lambda = phi0.lambda;
    const auto n = static_cast<Eigen::Index>(g.size());

    // regularized momentum factor (p^2 + Lambda^{-eps})^{-1/2}
    CVec reg(g.size()), zero(g.size(), Complex{0.0, 0.0});
    const double cutoff = std::pow(lambda, -eps);
    for (std::size_t i = 0; i < g.size(); ++i)
        reg[i] = Complex{1.0 / std::sqrt(g.momentum_sq(i) + cutoff), 0.0};
    const Eigen::MatrixXcd R = densify(BlockOp::diag(g, std::move(reg), std::move(zero))).c_mat;

    KernelPair kern{phi0.phi, V, lambda, 0.0};
    const Eigen::MatrixXcd Q = kern.dense_Q();
    Eigen::VectorXcd ph = to_eigen(phi0.phi.values);
    const Eigen::MatrixXcd Ktilde =
        ph.asDiagonal() * dense_convolution_matrix(V) * ph.asDiagonal();

    Eigen::MatrixXcd T = Q * R * Ktilde * R * Q;
    T = 0.5 * (T + T.adjoint()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(T);
    if (eig.info() != Eigen::Success) throw std::runtime_error("build_Z0: eigensolver failed");
    Eigen::VectorXd lam = eig.eigenvalues();
    Z0Result out;
    out.min_eig_T = lam.minCoeff();
    out.max_eig_T = lam.maxCoeff();
    if (out.min_eig_T < -1e-10)
        throw std::runtime_error("build_Z0: T^Lambda has a negative eigenvalue beyond tolerance");

    Eigen::VectorXd tq(n), tqi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = std::max(0.0, lam(i));
        tq(i) = std::pow(1.0 + l, -0.25);
        tqi(i) = std::pow(1.0 + l, 0.25);
    }
    const Eigen::MatrixXcd U = eig.eigenvectors();
    const Eigen::MatrixXcd tau = U * tq.asDiagonal() * U.adjoint();
    const Eigen::MatrixXcd tau_inv = U * tqi.asDiagonal() * U.adjoint();

    out.z0 = BlockOp::dense(g, tau + tau_inv, tau - tau_inv);
    out.z0.provenance = "Z0_literal";
    out.z0_symplectic = BlockOp::dense(g, 0.5 * (tau + tau_inv), 0.5 * (tau - tau_inv));
    out.z0_symplectic.is_symplectic_candidate = true;
    out.z0_symplectic.provenance = "Z0_symplectic";
    out.defect_symplectic = symplectic_defect(out.z0_symplectic);
    out.op_norm_half = std::pow(1.0 + std::max(0.0, out.max_eig_T), 0.25);
    double hs2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double l = std::max(0.0, lam(i));
        const double f1 = 0.5 * (std::pow(1.0 + l, -0.5) + std::pow(1.0 + l, 0.5)) - 1.0;
        const double f2 = 0.5 * (std::pow(1.0 + l, -0.5) - std::pow(1.0 + l, 0.5));
        hs2 += 2.0 * (f1 * f1 + f2 * f2);
    }
    out.hs_zz_minus_one = std::sqrt(hs2);
    return out;
}

Z0Diagnostics z0_convergence_diagnostics(const Z0Result& z0, const Dispersion& disp,
                                         const std::vector<DoubledVector>& test_vectors,
                                         const std::vector<double>& x_shifts) {
    // The regularized family converges to the pair built from
    // tau = (1 + b(p)/p^2)^{-1/4}, the limit of (1 + T^Lambda)^{-1/4}; the
    // dispersion's tau = sqrt(p^2 / 2 omega) differs from it by the factor 4
    // multiplying Vhat inside, so the diagnostic is formed with the former.
    const GridSpec& g = disp.grid;
    CVec tauv(g.size()), uu(g.size()), vv(g.size()), zero(g.size(), Complex{0.0, 0.0});
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double p2 = g.momentum_sq(i);
        if (p2 == 0.0) {
            tauv[i] = Complex{0.0, 0.0};
            uu[i] = Complex{1.0, 0.0};
            vv[i] = Complex{0.0, 0.0};
            continue;
        }
        const double t = std::pow(1.0 + disp.b[i] / p2, -0.25);
        tauv[i] = Complex{t, 0.0};
        uu[i] = Complex{0.5 * (t + 1.0 / t), 0.0};
        vv[i] = Complex{0.5 * (t - 1.0 / t), 0.0};
    }
    const BlockOp D_tau = BlockOp::diag(g, std::move(tauv), std::move(zero), BlockOp::Form::Map, true);
    const BlockOp Tinv =
        symplectic_inverse(BlockOp::diag(g, std::move(uu), std::move(vv), BlockOp::Form::Map, true));

    Z0Diagnostics out;
    for (const auto& F : test_vectors) {
        DoubledVector target = apply_block(D_tau, F);
        DoubledVector lhs = apply_block(z0.z0_symplectic, apply_block(Tinv, target));
        out.convergence = std::max(out.convergence, (lhs - target).norm());

        for (double x : x_shifts) {
            CVec trans(g.size());
            int idx[3];
            for (std::size_t i = 0; i < g.size(); ++i) {
                g.unflatten(i, idx);
                const double px = g.momentum(idx[0]);
                trans[i] = std::exp(Complex{0.0, -px * x});
            }
            const BlockOp Tx = BlockOp::diag(g, trans, CVec(g.size(), Complex{0.0, 0.0}));
            DoubledVector a = apply_block(z0.z0_symplectic, apply_block(Tx, F));
            DoubledVector b = apply_block(Tx, apply_block(z0.z0_symplectic, F));
            const double w = 1.0 / std::sqrt(1.0 + x * x);
            out.commutator = std::max(out.commutator, w * (a - b).norm());
        }
    }
    return out;
}

Field shift_field(const Field& f, long x_cells, int axis) {
    const GridSpec& g = f.grid;
    Field out(g, f.space);
    int idx[3];
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.unflatten(i, idx);
        int src[3];
        for (int a = 0; a < g.dim; ++a) src[a] = idx[a];
        long s = (idx[axis] - x_cells) % g.points_per_axis;
        if (s < 0) s += g.points_per_axis;
        src[axis] = static_cast<int>(s);
        out.values[i] = f.values[g.flatten(src)];
    }
    return out;
}

DoubledVector interaction_vector_finite(const BogoliubovPath& path, const KernelPair& kernels,
                                        const Field& W, double t, long x_cells) {
    const Field Wx = shift_field(W, x_cells);
    Field coupled = pointwise(Wx, kernels.phi);
    Field projected(coupled.grid, Space::Position, kernels.apply_Q(coupled.values));
    DoubledVector F(projected, projected);
    const BlockOp inv = symplectic_inverse(path.at_time(t));
    return apply_block(inv, F);
}

DoubledVector interaction_vector_infty(const Dispersion& disp, const Field& W, double t,
                                       long x_cells) {
    const Field Wx = shift_field(W, x_cells);
    DoubledVector F(Wx, Wx);
    const BlockOp inv = symplectic_inverse(v_infty_explicit(disp, t));
    return apply_block(inv, F);
}

Table convergence_diagnostics_infty(const HartreeTrajectory& traj, const BogoliubovPath& path,
                                    const Dispersion& disp, const Field& test_f,
                                    const std::vector<double>& times) {
    Table tab;
    tab.columns = {"t", "q_defect", "mu_dev", "phase_dev", "k1_dev", "k2_dev", "v_dev"};

    const Field& V = traj.V;
    const double lambda = traj.lambda;
    const double int_V = [&] {
        Complex s{0.0, 0.0};
        for (const auto& v : V.values) s += v;
        return s.real() * V.weight();
    }();
    double quartic = 0.0;
    for (const auto& v : traj.phi0.values) quartic += std::norm(v) * std::norm(v);
    quartic *= traj.phi0.weight();
    const double mu_inf = 0.5 * quartic / lambda * int_V;
    const double nu = int_V - mu_inf;

    for (double t : times) {
        const Field& phi = traj.at_time(t);
        CondensateState st{phi, t, lambda, traj.mu_at(t)};
        KernelPair kern = build_kernels(st, V);

        const Complex ip = [&] {
            Complex s{0.0, 0.0};
            for (std::size_t i = 0; i < phi.values.size(); ++i)
                s += std::conj(phi.values[i]) * test_f.values[i];
            return s * phi.weight();
        }();
        const double q_defect = std::abs(ip) / std::sqrt(lambda);

        const double mu_dev = std::abs(traj.mu_at(t) - mu_inf);

        const Complex phase = std::exp(Complex{0.0, -t * nu});
        Field pd = test_f;
        for (std::size_t i = 0; i < pd.values.size(); ++i)
            pd.values[i] *= (phi.values[i] - phase);
        const double phase_dev = pd.norm2();

        Field k1f(phi.grid, Space::Position, kern.apply_K1(test_f.values));
        Field vf = convolve(V, test_f);
        const double k1_dev = (k1f - vf).norm2();

        Field k2f(phi.grid, Space::Position, kern.apply_K2J(test_f.values));
        Field vfc = convolve(V, conj(test_f));
        vfc *= std::exp(Complex{0.0, -2.0 * t * nu});
        const double k2_dev = (k2f - vfc).norm2();

        DoubledVector F(test_f, test_f);
        CVec ph(phi.grid.size(), std::exp(Complex{0.0, t * nu}));
        const BlockOp phase_op = BlockOp::diag(phi.grid, std::move(ph),
                                               CVec(phi.grid.size(), Complex{0.0, 0.0}));
        DoubledVector lhs = apply_block(phase_op, apply_block(path.at_time(t), F));
        DoubledVector rhs = apply_block(v_infty_explicit(disp, t), F);
        const double v_dev = (lhs - rhs).norm();

        tab.add_row({t, q_defect, mu_dev, phase_dev, k1_dev, k2_dev, v_dev});
    }
    return tab;
}

double rate_bookkeeping_gamma(double delta, double s) {
    double g = std::min(s, std::min(1.5 * (1.0 / 3.0 - s), 1.0 / 6.0));
    if (delta >= 0.0) g = std::min(g, delta);
    return g;
}

}  // namespace polaron
