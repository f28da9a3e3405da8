#include "fock.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace polaron {

// ---------------------------------------------------------------- mode sets

ModeSet ModeSet::lowest_pairs(const GridSpec& g, int count) {
    if (count < 1 || static_cast<std::size_t>(count) >= g.size())
        throw std::invalid_argument("ModeSet: count must be in [1, M^d - 1]");
    // positive representatives sorted by |p|^2 then lex on the index vector
    struct Rep {
        double p2;
        std::vector<int> idx;
        std::size_t flat, neg;
    };
    std::vector<Rep> reps;
    int idx[3];
    for (std::size_t i = 1; i < g.size(); ++i) {
        g.unflatten(i, idx);
        std::size_t neg;
        {
            int nidx[3];
            for (int a = 0; a < g.dim; ++a) nidx[a] = (g.points_per_axis - idx[a]) % g.points_per_axis;
            neg = g.flatten(nidx);
        }
        if (neg < i) continue;  // keep one representative per pair (neg == i allowed)
        Rep r;
        r.p2 = g.momentum_sq(i);
        r.idx.assign(idx, idx + g.dim);
        r.flat = i;
        r.neg = neg;
        reps.push_back(std::move(r));
    }
    std::sort(reps.begin(), reps.end(), [](const Rep& a, const Rep& b) {
        if (a.p2 != b.p2) return a.p2 < b.p2;
        return a.idx < b.idx;
    });
    ModeSet out;
    out.grid = g;
    for (const auto& r : reps) {
        if (static_cast<int>(out.mode_indices.size()) >= count) break;
        out.mode_indices.push_back(r.flat);
        if (r.neg != r.flat && static_cast<int>(out.mode_indices.size()) < count)
            out.mode_indices.push_back(r.neg);
    }
    if (static_cast<int>(out.mode_indices.size()) != count)
        throw std::invalid_argument("ModeSet: could not realize the requested count with +-p pairs");
    return out;
}

double ModeSet::momentum_component(int k, int axis) const {
    int idx[3];
    grid.unflatten(mode_indices[static_cast<std::size_t>(k)], idx);
    return grid.momentum(idx[axis]);
}

double ModeSet::momentum_sq(int k) const {
    return grid.momentum_sq(mode_indices[static_cast<std::size_t>(k)]);
}

Field ModeSet::mode_field(int k) const {
    Field f(grid, Space::Position);
    int idx[3];
    grid.unflatten(mode_indices[static_cast<std::size_t>(k)], idx);
    double p[3];
    for (int a = 0; a < grid.dim; ++a) p[a] = grid.momentum(idx[a]);
    double x[3];
    double vol = 1.0;
    for (int a = 0; a < grid.dim; ++a) vol *= grid.box_length;
    const double amp = 1.0 / std::sqrt(vol);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.position(i, x);
        double phase = 0.0;
        for (int a = 0; a < grid.dim; ++a) phase += p[a] * x[a];
        f.values[i] = amp * Complex{std::cos(phase), std::sin(phase)};
    }
    return f;
}

ModeBlock project_to_modes(const BlockOp& Z, const ModeSet& modes) {
    const int n = modes.count();
    ModeBlock mb;
    mb.c.resize(n, n);
    mb.d.resize(n, n);
    std::vector<Field> u;
    u.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) u.push_back(modes.mode_field(k));
    const Field zero(modes.grid, Space::Position);
    for (int j = 0; j < n; ++j) {
        const DoubledVector cj = apply_block(Z, DoubledVector(u[static_cast<std::size_t>(j)], zero));
        const DoubledVector dj = apply_block(Z, DoubledVector(zero, u[static_cast<std::size_t>(j)]));
        for (int i = 0; i < n; ++i) {
            mb.c(i, j) = u[static_cast<std::size_t>(i)].inner(cj.upper);
            mb.d(i, j) = u[static_cast<std::size_t>(i)].inner(dj.upper);
        }
    }
    return mb;
}

// ------------------------------------------------------------------- basis

namespace {

std::string pack_key(const std::vector<std::uint8_t>& occ) {
    return std::string(occ.begin(), occ.end());
}

void enumerate_grade(int n_modes, int grade, std::vector<std::uint8_t>& occ, int mode,
                     std::vector<std::vector<std::uint8_t>>& out) {
    if (mode == 0) {
        occ[0] = static_cast<std::uint8_t>(grade);
        out.push_back(occ);
        return;
    }
    // last mode's occupation descends first (graded reverse-lex, ascending)
    for (int k = grade; k >= 0; --k) {
        occ[static_cast<std::size_t>(mode)] = static_cast<std::uint8_t>(k);
        enumerate_grade(n_modes, grade - k, occ, mode - 1, out);
    }
}

}  // namespace

FockBasis FockBasis::truncated(int n_modes, int n_max) {
    if (n_modes < 1 || n_max < 0) throw std::invalid_argument("FockBasis: bad sizes");
    FockBasis b;
    b.n_modes = n_modes;
    b.n_max = n_max;
    b.fixed_total = false;
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(n_modes), 0);
    for (int g = 0; g <= n_max; ++g) enumerate_grade(n_modes, g, occ, n_modes - 1, b.states);
    for (std::size_t i = 0; i < b.states.size(); ++i) b.lookup.emplace(pack_key(b.states[i]), i);
    return b;
}

FockBasis FockBasis::sector(int n_modes, int n_total) {
    if (n_modes < 1 || n_total < 0) throw std::invalid_argument("FockBasis: bad sizes");
    FockBasis b;
    b.n_modes = n_modes;
    b.n_max = n_total;
    b.fixed_total = true;
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(n_modes), 0);
    enumerate_grade(n_modes, n_total, occ, n_modes - 1, b.states);
    for (std::size_t i = 0; i < b.states.size(); ++i) b.lookup.emplace(pack_key(b.states[i]), i);
    return b;
}

long FockBasis::index_of(const std::vector<std::uint8_t>& occ) const {
    auto it = lookup.find(pack_key(occ));
    return it == lookup.end() ? -1 : static_cast<long>(it->second);
}

int FockBasis::total(std::size_t idx) const {
    int t = 0;
    for (auto v : states[idx]) t += v;
    return t;
}

// ------------------------------------------------------- operator assembly

SpMat dGamma(const FockBasis& basis, const Eigen::MatrixXcd& A) {
    const int m = basis.n_modes;
    if (A.rows() != m || A.cols() != m) throw std::invalid_argument("dGamma: size mismatch");
    std::vector<Eigen::Triplet<Complex>> trips;
    for (std::size_t s = 0; s < basis.dim(); ++s) {
        const auto& occ = basis.states[s];
        Complex diag{0.0, 0.0};
        for (int k = 0; k < m; ++k) diag += A(k, k) * static_cast<double>(occ[static_cast<std::size_t>(k)]);
        if (diag != Complex{0.0, 0.0})
            trips.emplace_back(static_cast<int>(s), static_cast<int>(s), diag);
        std::vector<std::uint8_t> target = occ;
        for (int l = 0; l < m; ++l) {
            if (occ[static_cast<std::size_t>(l)] == 0) continue;
            for (int k = 0; k < m; ++k) {
                if (k == l || A(k, l) == Complex{0.0, 0.0}) continue;
                target = occ;
                target[static_cast<std::size_t>(l)] -= 1;
                target[static_cast<std::size_t>(k)] += 1;
                const long t = basis.index_of(target);
                if (t < 0) continue;
                const double amp = std::sqrt(static_cast<double>(occ[static_cast<std::size_t>(l)]) *
                                             (occ[static_cast<std::size_t>(k)] + 1.0));
                trips.emplace_back(static_cast<int>(t), static_cast<int>(s), A(k, l) * amp);
            }
        }
    }
    SpMat H(static_cast<int>(basis.dim()), static_cast<int>(basis.dim()));
    H.setFromTriplets(trips.begin(), trips.end());
    return H;
}

SpMat number_op(const FockBasis& basis) {
    return diagonal_op(basis, [](const std::vector<std::uint8_t>& occ) {
        double t = 0.0;
        for (auto v : occ) t += v;
        return t;
    });
}

SpMat diagonal_op(const FockBasis& basis,
                  const std::function<double(const std::vector<std::uint8_t>&)>& fn) {
    std::vector<Eigen::Triplet<Complex>> trips;
    for (std::size_t s = 0; s < basis.dim(); ++s) {
        const double v = fn(basis.states[s]);
        if (v != 0.0) trips.emplace_back(static_cast<int>(s), static_cast<int>(s), Complex{v, 0.0});
    }
    SpMat H(static_cast<int>(basis.dim()), static_cast<int>(basis.dim()));
    H.setFromTriplets(trips.begin(), trips.end());
    return H;
}

SpMat pair_quadratic(const FockBasis& basis, const Eigen::MatrixXcd& B) {
    const int m = basis.n_modes;
    if (B.rows() != m || B.cols() != m) throw std::invalid_argument("pair_quadratic: size mismatch");
    if (basis.fixed_total)
        throw std::invalid_argument("pair_quadratic: not number-conserving, needs truncated basis");
    std::vector<Eigen::Triplet<Complex>> trips;
    for (std::size_t s = 0; s < basis.dim(); ++s) {
        const auto& occ = basis.states[s];
        int total = 0;
        for (auto v : occ) total += v;
        if (total + 2 > basis.n_max) continue;
        for (int mm = 0; mm < m; ++mm)
            for (int nn = 0; nn < m; ++nn) {
                if (B(mm, nn) == Complex{0.0, 0.0}) continue;
                std::vector<std::uint8_t> target = occ;
                double amp = std::sqrt(target[static_cast<std::size_t>(nn)] + 1.0);
                target[static_cast<std::size_t>(nn)] += 1;
                amp *= std::sqrt(target[static_cast<std::size_t>(mm)] + 1.0);
                target[static_cast<std::size_t>(mm)] += 1;
                const long t = basis.index_of(target);
                if (t < 0) continue;
                trips.emplace_back(static_cast<int>(t), static_cast<int>(s), 0.5 * B(mm, nn) * amp);
            }
    }
    SpMat X(static_cast<int>(basis.dim()), static_cast<int>(basis.dim()));
    X.setFromTriplets(trips.begin(), trips.end());
    SpMat Xd = SpMat(X.adjoint());
    return X + Xd;
}

SpMat linear_coupling(const FockBasis& basis, const Eigen::VectorXcd& coeff) {
    const int m = basis.n_modes;
    if (coeff.size() != m) throw std::invalid_argument("linear_coupling: size mismatch");
    std::vector<Eigen::Triplet<Complex>> trips;
    for (std::size_t s = 0; s < basis.dim(); ++s) {
        const auto& occ = basis.states[s];
        int total = 0;
        for (auto v : occ) total += v;
        for (int k = 0; k < m; ++k) {
            if (coeff(k) == Complex{0.0, 0.0}) continue;
            if (occ[static_cast<std::size_t>(k)] > 0) {  // conj(c_k) a_k
                std::vector<std::uint8_t> target = occ;
                const double amp = std::sqrt(static_cast<double>(target[static_cast<std::size_t>(k)]));
                target[static_cast<std::size_t>(k)] -= 1;
                const long t = basis.index_of(target);
                if (t >= 0)
                    trips.emplace_back(static_cast<int>(t), static_cast<int>(s),
                                       std::conj(coeff(k)) * amp);
            }
            if (total + 1 <= basis.n_max) {  // c_k a*_k
                std::vector<std::uint8_t> target = occ;
                const double amp = std::sqrt(target[static_cast<std::size_t>(k)] + 1.0);
                target[static_cast<std::size_t>(k)] += 1;
                const long t = basis.index_of(target);
                if (t >= 0)
                    trips.emplace_back(static_cast<int>(t), static_cast<int>(s), coeff(k) * amp);
            }
        }
    }
    SpMat H(static_cast<int>(basis.dim()), static_cast<int>(basis.dim()));
    H.setFromTriplets(trips.begin(), trips.end());
    return H;
}

SpMat quartic_op(const FockBasis& basis, const std::vector<Complex>& V4, double prefac) {
    const int m = basis.n_modes;
    if (V4.size() != static_cast<std::size_t>(m) * m * m * m)
        throw std::invalid_argument("quartic_op: tensor size mismatch");
    auto v4 = [&](int a, int b, int c, int d) {
        return V4[static_cast<std::size_t>(((a * m + b) * m + c) * m + d)];
    };
    std::vector<Eigen::Triplet<Complex>> trips;
    std::vector<int> occupied;
    for (std::size_t s = 0; s < basis.dim(); ++s) {
        const auto& occ = basis.states[s];
        occupied.clear();
        for (int k = 0; k < m; ++k)
            if (occ[static_cast<std::size_t>(k)] > 0) occupied.push_back(k);
        for (int q : occupied)
            for (int p : occupied) {
                // a_p a_q with a_q acting first
                const double nq = occ[static_cast<std::size_t>(q)];
                const double np = occ[static_cast<std::size_t>(p)] - (p == q ? 1.0 : 0.0);
                if (np < 1.0) continue;
                const double amp1 = std::sqrt(nq * np);
                std::vector<std::uint8_t> mid = occ;
                mid[static_cast<std::size_t>(q)] -= 1;
                mid[static_cast<std::size_t>(p)] -= 1;
                for (int nn = 0; nn < m; ++nn) {
                    for (int mm = 0; mm < m; ++mm) {
                        const Complex v = v4(mm, nn, p, q);
                        if (v == Complex{0.0, 0.0}) continue;
                        std::vector<std::uint8_t> target = mid;
                        double amp = std::sqrt(target[static_cast<std::size_t>(nn)] + 1.0);
                        target[static_cast<std::size_t>(nn)] += 1;
                        amp *= std::sqrt(target[static_cast<std::size_t>(mm)] + 1.0);
                        target[static_cast<std::size_t>(mm)] += 1;
                        const long t = basis.index_of(target);
                        if (t < 0) continue;
                        trips.emplace_back(static_cast<int>(t), static_cast<int>(s),
                                           prefac * v * amp1 * amp);
                    }
                }
            }
    }
    SpMat H(static_cast<int>(basis.dim()), static_cast<int>(basis.dim()));
    H.setFromTriplets(trips.begin(), trips.end());
    return H;
}

SpMat annihilator(const FockBasis& basis, int mode) {
    std::vector<Eigen::Triplet<Complex>> trips;
    for (std::size_t s = 0; s < basis.dim(); ++s) {
        const auto& occ = basis.states[s];
        if (occ[static_cast<std::size_t>(mode)] == 0) continue;
        std::vector<std::uint8_t> target = occ;
        const double amp = std::sqrt(static_cast<double>(target[static_cast<std::size_t>(mode)]));
        target[static_cast<std::size_t>(mode)] -= 1;
        const long t = basis.index_of(target);
        if (t >= 0) trips.emplace_back(static_cast<int>(t), static_cast<int>(s), Complex{amp, 0.0});
    }
    SpMat H(static_cast<int>(basis.dim()), static_cast<int>(basis.dim()));
    H.setFromTriplets(trips.begin(), trips.end());
    return H;
}

double hermiticity_residual(const SpMat& H, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    const auto n = H.rows();
    double worst = 0.0;
    for (int trial = 0; trial < 4; ++trial) {
        Eigen::VectorXcd a(n), b(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            a(i) = Complex{dist(rng), dist(rng)};
            b(i) = Complex{dist(rng), dist(rng)};
        }
        a.normalize();
        b.normalize();
        const Complex lhs = a.dot(H * b);           // <a, H b>
        const Complex rhs = std::conj(b.dot(H * a));  // <H a, b>*... = conj(<b, H a>)
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

// ------------------------------------------------------------------ krylov

LinOp linop_from_sparse(const SpMat& H) {
    auto Hp = std::make_shared<SpMat>(H);
    LinOp op;
    op.dim = static_cast<std::size_t>(H.rows());
    op.apply = [Hp](const CVec& in, CVec& out) {
        Eigen::Map<const Eigen::VectorXcd> vi(in.data(), static_cast<Eigen::Index>(in.size()));
        Eigen::Map<Eigen::VectorXcd> vo(out.data(), static_cast<Eigen::Index>(out.size()));
        vo = (*Hp) * vi;
    };
    return op;
}

namespace {

double vec_norm(const CVec& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return std::sqrt(s);
}

Complex vec_dot(const CVec& a, const CVec& b) {  // <a, b>
    Complex s{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

}  // namespace

CVec krylov_expv(const LinOp& H, const CVec& v, Complex prefactor, int krylov_dim) {
    const std::size_t n = H.dim;
    const double beta0 = vec_norm(v);
    if (beta0 == 0.0) return v;
    const int m = std::min<int>(krylov_dim, static_cast<int>(n));

    std::vector<CVec> basis;
    basis.reserve(static_cast<std::size_t>(m));
    CVec w = v;
    for (auto& z : w) z /= beta0;
    basis.push_back(w);

    std::vector<double> alpha, beta;
    CVec Hv(n);
    int built = 0;
    for (int j = 0; j < m; ++j) {
        H.apply(basis[static_cast<std::size_t>(j)], Hv);
        const double a = vec_dot(basis[static_cast<std::size_t>(j)], Hv).real();
        alpha.push_back(a);
        built = j + 1;
        if (j + 1 == m) break;
        // full reorthogonalization
        for (int r = 0; r < 2; ++r)
            for (int k = 0; k <= j; ++k) {
                const Complex c = vec_dot(basis[static_cast<std::size_t>(k)], Hv);
                for (std::size_t i = 0; i < n; ++i) Hv[i] -= c * basis[static_cast<std::size_t>(k)][i];
            }
        const double b = vec_norm(Hv);
        if (b < 1e-13) break;  // happy breakdown
        beta.push_back(b);
        for (auto& z : Hv) z /= b;
        basis.push_back(Hv);
    }

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(built, built);
    for (int j = 0; j < built; ++j) {
        T(j, j) = alpha[static_cast<std::size_t>(j)];
        if (j + 1 < built) {
            T(j, j + 1) = beta[static_cast<std::size_t>(j)];
            T(j + 1, j) = beta[static_cast<std::size_t>(j)];
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
    Eigen::VectorXcd coeff(built);
    for (int j = 0; j < built; ++j) {
        Complex acc{0.0, 0.0};
        for (int k = 0; k < built; ++k)
            acc += eig.eigenvectors()(j, k) * std::exp(prefactor * eig.eigenvalues()(k)) *
                   eig.eigenvectors()(0, k);
        coeff(j) = acc * beta0;
    }
    CVec out(n, Complex{0.0, 0.0});
    for (int j = 0; j < built; ++j)
        for (std::size_t i = 0; i < n; ++i) out[i] += coeff(j) * basis[static_cast<std::size_t>(j)][i];
    return out;
}

double lanczos_ground_state(const LinOp& H, CVec& vec, int krylov_dim, int max_restarts,
                            double tol) {
    const std::size_t n = H.dim;
    if (vec_norm(vec) == 0.0) throw std::invalid_argument("lanczos_ground_state: zero start");
    double e_prev = 1e300;
    for (int restart = 0; restart < max_restarts; ++restart) {
        const int m = std::min<int>(krylov_dim, static_cast<int>(n));
        std::vector<CVec> basis;
        CVec w = vec;
        const double nv = vec_norm(w);
        for (auto& z : w) z /= nv;
        basis.push_back(w);
        std::vector<double> alpha, beta;
        CVec Hv(n);
        int built = 0;
        for (int j = 0; j < m; ++j) {
            H.apply(basis[static_cast<std::size_t>(j)], Hv);
            alpha.push_back(vec_dot(basis[static_cast<std::size_t>(j)], Hv).real());
            built = j + 1;
            if (j + 1 == m) break;
            for (int r = 0; r < 2; ++r)
                for (int k = 0; k <= j; ++k) {
                    const Complex c = vec_dot(basis[static_cast<std::size_t>(k)], Hv);
                    for (std::size_t i = 0; i < n; ++i)
                        Hv[i] -= c * basis[static_cast<std::size_t>(k)][i];
                }
            const double b = vec_norm(Hv);
            if (b < 1e-13) break;
            beta.push_back(b);
            for (auto& z : Hv) z /= b;
            basis.push_back(Hv);
        }
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(built, built);
        for (int j = 0; j < built; ++j) {
            T(j, j) = alpha[static_cast<std::size_t>(j)];
            if (j + 1 < built) {
                T(j, j + 1) = beta[static_cast<std::size_t>(j)];
                T(j + 1, j) = beta[static_cast<std::size_t>(j)];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
        const double e0 = eig.eigenvalues()(0);
        CVec ground(n, Complex{0.0, 0.0});
        for (int j = 0; j < built; ++j) {
            const double c = eig.eigenvectors()(j, 0);
            for (std::size_t i = 0; i < n; ++i) ground[i] += c * basis[static_cast<std::size_t>(j)][i];
        }
        vec = std::move(ground);
        if (std::abs(e0 - e_prev) < tol) return e0;
        e_prev = e0;
    }
    return e_prev;
}

// --------------------------------------------------------- polaron spaces

double ImpurityGrid::coordinate(int i) const {
    return (i < n_x / 2 ? i : i - n_x) * spacing();
}

double ImpurityGrid::momentum(int k) const {
    const double dk = 2.0 * GridSpec::pi() / length;
    return dk * (k < n_x / 2 ? k : k - n_x);
}

Eigen::MatrixXcd ImpurityGrid::kinetic() const {
    Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(n_x, n_x);
    for (int i = 0; i < n_x; ++i)
        for (int j = 0; j < n_x; ++j) {
            Complex acc{0.0, 0.0};
            for (int k = 0; k < n_x; ++k) {
                const double p = momentum(k);
                const double ph = p * (coordinate(i) - coordinate(j));
                acc += (0.5 * p * p / mass) * Complex{std::cos(ph), std::sin(ph)};
            }
            K(i, j) = acc / static_cast<double>(n_x);
        }
    return K;
}

double PolaronState::norm() const {
    double s = 0.0;
    for (const auto& z : amp) s += std::norm(z);
    return std::sqrt(s);
}

void PolaronState::normalize() {
    const double n = norm();
    if (n > 0.0)
        for (auto& z : amp) z /= n;
}

PolaronState vacuum_with_gaussian_impurity(std::shared_ptr<const PolaronSpace> space,
                                           double impurity_width) {
    PolaronState psi;
    psi.space = space;
    psi.amp.assign(space->dim(), Complex{0.0, 0.0});
    const std::size_t fd = space->fock.dim();
    for (int i = 0; i < space->imp.n_x; ++i) {
        const double x = space->imp.coordinate(i);
        psi.amp[static_cast<std::size_t>(i) * fd] =
            Complex{std::exp(-x * x / (2.0 * impurity_width * impurity_width)), 0.0};
    }
    psi.normalize();
    return psi;
}

void PolaronHamiltonian::apply(const CVec& in, CVec& out) const {
    const int nx = space->imp.n_x;
    const auto fd = static_cast<Eigen::Index>(space->fock.dim());
    out.assign(in.size(), Complex{0.0, 0.0});
    using RowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> vin(in.data(), nx, fd);
    Eigen::Map<RowMat> vout(out.data(), nx, fd);
    vout.noalias() = kin_x * vin;
    for (int ix = 0; ix < nx; ++ix) {
        vout.row(ix).transpose() += fock_static * vin.row(ix).transpose();
        if (!coupling.empty())
            vout.row(ix).transpose() += coupling[static_cast<std::size_t>(ix)] * vin.row(ix).transpose();
        if (!potential_x.empty()) vout.row(ix) += potential_x[static_cast<std::size_t>(ix)] * vin.row(ix);
    }
}

LinOp PolaronHamiltonian::linop() const {
    LinOp op;
    op.dim = space->dim();
    op.apply = [this](const CVec& in, CVec& out) { this->apply(in, out); };
    return op;
}

double PolaronHamiltonian::expectation(const PolaronState& psi) const {
    CVec out(psi.amp.size());
    apply(psi.amp, out);
    return vec_dot(psi.amp, out).real();
}

// ---------------------------------------------------------- BF assemblies

namespace {

void check_no_condensate_mode(const ModeSet& modes) {
    for (auto m : modes.mode_indices)
        if (m == modes.grid.zero_mode_index())
            throw std::invalid_argument("mode set must exclude the condensate/zero mode");
}

Field apply_h_field(const KernelPair& kernels, double mu, const Field& f) {
    // h = -Lap/2 + V*|phi|^2 - mu
    Field fh = fourier(f, Space::Momentum);
    for (std::size_t i = 0; i < fh.values.size(); ++i)
        fh.values[i] *= 0.5 * fh.grid.momentum_sq(i);
    Field out = fourier(fh, Space::Position);
    Field density = pointwise(conj(kernels.phi), kernels.phi);
    Field mean = convolve(kernels.V, density);
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] += (mean.values[i].real() - mu) * f.values[i];
    return out;
}

}  // namespace

void hbog_mode_matrices(const KernelPair& kernels, double mu, const ModeSet& modes,
                        Eigen::MatrixXcd& one_body, Eigen::MatrixXcd& pair) {
    check_no_condensate_mode(modes);
    const int n = modes.count();
    one_body.resize(n, n);
    pair.resize(n, n);
    std::vector<Field> u;
    for (int k = 0; k < n; ++k) u.push_back(modes.mode_field(k));
    for (int j = 0; j < n; ++j) {
        Field hj = apply_h_field(kernels, mu, u[static_cast<std::size_t>(j)]);
        Field k1j(hj.grid, Space::Position, kernels.apply_K1(u[static_cast<std::size_t>(j)].values));
        Field k2j(hj.grid, Space::Position, kernels.apply_K2J(u[static_cast<std::size_t>(j)].values));
        for (int i = 0; i < n; ++i) {
            one_body(i, j) = u[static_cast<std::size_t>(i)].inner(hj) +
                             u[static_cast<std::size_t>(i)].inner(k1j);
            pair(i, j) = u[static_cast<std::size_t>(i)].inner(k2j);
        }
    }
}

SpMat build_HBog(const KernelPair& kernels, double mu, const ModeSet& modes,
                 const FockBasis& basis) {
    Eigen::MatrixXcd one_body, pair;
    hbog_mode_matrices(kernels, mu, modes, one_body, pair);
    return dGamma(basis, one_body) + pair_quadratic(basis, pair);
}

namespace {

long impurity_shift_cells(const ModeSet& modes, const ImpurityGrid& imp, int ix) {
    // impurity point ix sits on the axis-0 sublattice of the boson grid
    const int M = modes.grid.points_per_axis;
    if (M % imp.n_x != 0)
        throw std::invalid_argument("impurity grid must divide the boson grid along axis 0");
    const long stride = M / imp.n_x;
    return stride * ix;
}

}  // namespace

BFAssembly build_HBF_finite(const KernelPair& kernels, double mu, const Field& W,
                            const ModeSet& modes, std::shared_ptr<const PolaronSpace> space) {
    check_no_condensate_mode(modes);
    BFAssembly out;
    out.space = space;
    out.modes = modes;
    out.H.space = space;
    out.H.kin_x = space->imp.kinetic();
    out.H.fock_static = build_HBog(kernels, mu, modes, space->fock);
    const int n = modes.count();
    std::vector<Field> u;
    for (int k = 0; k < n; ++k) u.push_back(modes.mode_field(k));
    out.H.coupling.resize(static_cast<std::size_t>(space->imp.n_x));
    for (int ix = 0; ix < space->imp.n_x; ++ix) {
        const long cells = impurity_shift_cells(modes, space->imp, ix);
        const Field Wx = shift_field(W, cells);
        Field f = pointwise(Wx, kernels.phi);
        Field qf(f.grid, Space::Position, kernels.apply_Q(f.values));
        Eigen::VectorXcd coeff(n);
        for (int k = 0; k < n; ++k) coeff(k) = u[static_cast<std::size_t>(k)].inner(qf);
        out.H.coupling[static_cast<std::size_t>(ix)] = linear_coupling(space->fock, coeff);
    }
    return out;
}

BFAssembly build_HBF_infty(const Dispersion& disp, const Field& W, const ModeSet& modes,
                           std::shared_ptr<const PolaronSpace> space) {
    check_no_condensate_mode(modes);
    BFAssembly out;
    out.space = space;
    out.modes = modes;
    out.H.space = space;
    out.H.kin_x = space->imp.kinetic();
    const int n = modes.count();
    Eigen::MatrixXcd om = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 0; k < n; ++k) om(k, k) = disp.omega[modes.mode_indices[static_cast<std::size_t>(k)]];
    out.H.fock_static = dGamma(space->fock, om);

    const Field Wh = fourier(W, Space::Momentum);
    const double weight = std::pow(2.0 * GridSpec::pi() / modes.grid.box_length, 0.5 * modes.grid.dim);
    out.H.coupling.resize(static_cast<std::size_t>(space->imp.n_x));
    for (int ix = 0; ix < space->imp.n_x; ++ix) {
        const double x = space->imp.coordinate(ix);
        Eigen::VectorXcd coeff(n);
        for (int k = 0; k < n; ++k) {
            const std::size_t mi = modes.mode_indices[static_cast<std::size_t>(k)];
            const double tau = disp.tau[mi];
            const double px = modes.momentum_component(k, 0);
            coeff(k) = weight * tau * Wh.values[mi] * std::exp(Complex{0.0, -px * x});
        }
        out.H.coupling[static_cast<std::size_t>(ix)] = linear_coupling(space->fock, coeff);
    }
    return out;
}

PolaronHamiltonian transformed_BF_generator(const KernelPair& kernels, const Field& W,
                                            const BlockOp& v_t_inverse, const BlockOp& z_sym,
                                            const ModeSet& modes,
                                            std::shared_ptr<const PolaronSpace> space) {
    check_no_condensate_mode(modes);
    PolaronHamiltonian H;
    H.space = space;
    H.kin_x = space->imp.kinetic();
    H.fock_static = SpMat(static_cast<int>(space->fock.dim()), static_cast<int>(space->fock.dim()));
    const int n = modes.count();
    std::vector<Field> u;
    for (int k = 0; k < n; ++k) u.push_back(modes.mode_field(k));
    H.coupling.resize(static_cast<std::size_t>(space->imp.n_x));
    for (int ix = 0; ix < space->imp.n_x; ++ix) {
        const long cells = impurity_shift_cells(modes, space->imp, ix);
        const Field Wx = shift_field(W, cells);
        Field f = pointwise(Wx, kernels.phi);
        Field qf(f.grid, Space::Position, kernels.apply_Q(f.values));
        DoubledVector F(qf, qf);
        DoubledVector Ft = apply_block(z_sym, apply_block(v_t_inverse, F));
        Eigen::VectorXcd coeff(n);
        for (int k = 0; k < n; ++k) {
            const Complex a = u[static_cast<std::size_t>(k)].inner(Ft.upper);
            const Complex b = u[static_cast<std::size_t>(k)].inner(Ft.lower);
            coeff(k) = 0.5 * (a + b);  // hermitized; upper == lower analytically
        }
        H.coupling[static_cast<std::size_t>(ix)] = linear_coupling(space->fock, coeff);
    }
    return H;
}

// ------------------------------------------------------------ propagation

Table time_evolve(const std::function<PolaronHamiltonian(double)>& H_provider, PolaronState& psi,
                  double t_final, const EvolveOptions& opts) {
    Table tab;
    tab.columns = {"t", "norm", "energy", "N", "x2"};
    double t = 0.0;
    auto record = [&](double tcur) {
        if (!opts.record) return;
        PolaronHamiltonian H = H_provider(tcur);
        const TracerMoments tm = tracer_moments(psi, 1);
        tab.add_row({tcur, psi.norm(), H.expectation(psi), expect_number(psi), tm.x2m});
    };
    record(0.0);
    const long n_steps = std::max<long>(1, std::lround(std::ceil(t_final / opts.dt - 1e-12)));
    const double h = t_final / static_cast<double>(n_steps);
    for (long s = 0; s < n_steps; ++s) {
        PolaronHamiltonian H = H_provider(t + 0.5 * h);
        psi.amp = krylov_expv(H.linop(), psi.amp, Complex{0.0, -h}, opts.krylov_dim);
        t += h;
        record(t);
    }
    return tab;
}

double expect_number(const PolaronState& psi) {
    const std::size_t fd = psi.space->fock.dim();
    double acc = 0.0;
    for (std::size_t i = 0; i < psi.amp.size(); ++i)
        acc += psi.space->fock.total(i % fd) * std::norm(psi.amp[i]);
    const double n2 = psi.norm();
    return acc / (n2 * n2);
}

double expect_number_sq_plus(const PolaronState& psi) {
    const std::size_t fd = psi.space->fock.dim();
    double acc = 0.0;
    for (std::size_t i = 0; i < psi.amp.size(); ++i) {
        const double np1 = psi.space->fock.total(i % fd) + 1.0;
        acc += np1 * np1 * std::norm(psi.amp[i]);
    }
    const double n2 = psi.norm();
    return acc / (n2 * n2);
}

TracerMoments tracer_moments(const PolaronState& psi, int m_pow) {
    if (m_pow < 1 || m_pow > 2) throw std::invalid_argument("tracer_moments: m_pow in {1, 2}");
    const int nx = psi.space->imp.n_x;
    const auto fd = static_cast<Eigen::Index>(psi.space->fock.dim());
    const double n2 = psi.norm() * psi.norm();
    TracerMoments tm;

    for (int ix = 0; ix < nx; ++ix) {
        const double x = psi.space->imp.coordinate(ix);
        double slice = 0.0;
        for (Eigen::Index j = 0; j < fd; ++j)
            slice += std::norm(psi.amp[static_cast<std::size_t>(ix) * fd + static_cast<std::size_t>(j)]);
        tm.x2m += std::pow(x * x, m_pow) * slice;
    }
    tm.x2m /= n2;

    // momentum moments via the impurity DFT
    using RowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> vin(psi.amp.data(), nx, fd);
    Eigen::MatrixXcd Fx(nx, nx);
    for (int k = 0; k < nx; ++k)
        for (int i = 0; i < nx; ++i) {
            const double ph = -psi.space->imp.momentum(k) * psi.space->imp.coordinate(i);
            Fx(k, i) = Complex{std::cos(ph), std::sin(ph)} / std::sqrt(static_cast<double>(nx));
        }
    RowMat vhat = Fx * vin;
    for (int k = 0; k < nx; ++k) {
        const double p2 = psi.space->imp.momentum(k) * psi.space->imp.momentum(k);
        double slice = 0.0;
        for (Eigen::Index j = 0; j < fd; ++j)
            slice += std::norm(vhat(k, j));
        tm.p2m += std::pow(p2, m_pow) * slice;
    }
    tm.p2m /= n2;

    // h_oc = -Lap_x + x^2 + (N+1)^2
    if (m_pow == 1) {
        double lap = 0.0;
        for (int k = 0; k < nx; ++k) {
            const double p2 = psi.space->imp.momentum(k) * psi.space->imp.momentum(k);
            double slice = 0.0;
            for (Eigen::Index j = 0; j < fd; ++j) slice += std::norm(vhat(k, j));
            lap += p2 * slice;
        }
        lap /= n2;
        double x2 = 0.0;
        for (int ix = 0; ix < nx; ++ix) {
            const double x = psi.space->imp.coordinate(ix);
            double slice = 0.0;
            for (Eigen::Index j = 0; j < fd; ++j)
                slice += std::norm(psi.amp[static_cast<std::size_t>(ix) * fd + static_cast<std::size_t>(j)]);
            x2 += x * x * slice;
        }
        x2 /= n2;
        tm.hoc_m = lap + x2 + expect_number_sq_plus(psi);
    } else {
        // <h_oc^2> = ||h_oc psi||^2 / ||psi||^2
        CVec hpsi(psi.amp.size(), Complex{0.0, 0.0});
        Eigen::Map<RowMat> vout(hpsi.data(), nx, fd);
        RowMat tmp = vhat;
        for (int k = 0; k < nx; ++k)
            tmp.row(k) *= psi.space->imp.momentum(k) * psi.space->imp.momentum(k);
        vout = Fx.adjoint() * tmp;  // -Lap_x psi
        for (int ix = 0; ix < nx; ++ix) {
            const double x2 = std::pow(psi.space->imp.coordinate(ix), 2);
            for (Eigen::Index j = 0; j < fd; ++j) {
                const std::size_t idx = static_cast<std::size_t>(ix) * fd + static_cast<std::size_t>(j);
                const double np1 = psi.space->fock.total(static_cast<std::size_t>(j)) + 1.0;
                hpsi[idx] += (x2 + np1 * np1) * psi.amp[idx];
            }
        }
        double s = 0.0;
        for (const auto& z : hpsi) s += std::norm(z);
        tm.hoc_m = s / n2;
    }
    return tm;
}

// -------------------------------------------------- Bogoliubov unitaries

UnitaryResult implement_bogoliubov_unitary(const ModeBlock& z_modes, const FockBasis& basis,
                                           CVec& amp, int pad, int krylov_dim) {
    const auto n = z_modes.c.rows();
    if (z_modes.c.cols() != n || z_modes.d.rows() != n || z_modes.d.cols() != n)
        throw std::invalid_argument("implement_bogoliubov_unitary: block size mismatch");
    Eigen::MatrixXcd M(2 * n, 2 * n);
    M.topLeftCorner(n, n) = z_modes.c;
    M.topRightCorner(n, n) = z_modes.d;
    M.bottomLeftCorner(n, n) = z_modes.d.conjugate();
    M.bottomRightCorner(n, n) = z_modes.c.conjugate();

    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    S.topLeftCorner(n, n).setIdentity();
    S.bottomRightCorner(n, n) = -Eigen::MatrixXcd::Identity(n, n);
    const double defect =
        std::max((M * S * M.adjoint() - S).norm(), (M.adjoint() * S * M - S).norm());
    if (defect > 1e-8)
        throw std::invalid_argument("implement_bogoliubov_unitary: mode-restricted map not symplectic");

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(M, false);
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        const Complex ev = ces.eigenvalues()(i);
        if (ev.real() < 0.0 && std::abs(ev.imag()) < 1e-12 * std::abs(ev.real()))
            throw std::runtime_error(
                "implement_bogoliubov_unitary: eigenvalue on the negative real axis (log branch)");
    }
    const Eigen::MatrixXcd K = M.log();
    Eigen::MatrixXcd A = Complex{0.0, 1.0} * K.topLeftCorner(n, n);
    Eigen::MatrixXcd B = Complex{0.0, 1.0} * K.topRightCorner(n, n);
    UnitaryResult res;
    res.generator_residual = std::max((A - A.adjoint()).norm(), (B - B.transpose()).norm());
    A = 0.5 * (A + A.adjoint()).eval();
    B = 0.5 * (B + B.transpose()).eval();

    const FockBasis padded = FockBasis::truncated(basis.n_modes, basis.n_max + std::max(0, pad));
    CVec big(padded.dim(), Complex{0.0, 0.0});
    for (std::size_t s = 0; s < basis.dim(); ++s) {
        const long t = padded.index_of(basis.states[s]);
        big[static_cast<std::size_t>(t)] = amp[s];
    }
    const SpMat G = dGamma(padded, A) + pair_quadratic(padded, B);
    big = krylov_expv(linop_from_sparse(G), big, Complex{0.0, 1.0}, krylov_dim);

    double leak = 0.0;
    for (std::size_t s = 0; s < padded.dim(); ++s)
        if (padded.total(s) > basis.n_max) leak += std::norm(big[s]);
    res.leakage = std::sqrt(leak);

    for (std::size_t s = 0; s < basis.dim(); ++s) {
        const long t = padded.index_of(basis.states[s]);
        amp[s] = big[static_cast<std::size_t>(t)];
    }
    return res;
}

// ----------------------------------------------------------- polaron fiber

double polaron_fiber_energy(double P, const Dispersion& disp, const Field& W,
                            const ModeSet& modes, int n_max, double mass, double tol) {
    const FockBasis basis = FockBasis::truncated(modes.count(), n_max);
    const Field Wh = fourier(W, Space::Momentum);
    const double weight = std::pow(2.0 * GridSpec::pi() / modes.grid.box_length, 0.5 * modes.grid.dim);
    const int n = modes.count();

    // diagonal: (P - sum p n)^2 / 2m + sum omega n
    SpMat diag = diagonal_op(basis, [&](const std::vector<std::uint8_t>& occ) {
        double ptot = 0.0, om = 0.0;
        for (int k = 0; k < n; ++k) {
            ptot += modes.momentum_component(k, 0) * occ[static_cast<std::size_t>(k)];
            om += disp.omega[modes.mode_indices[static_cast<std::size_t>(k)]] * occ[static_cast<std::size_t>(k)];
        }
        return (P - ptot) * (P - ptot) / (2.0 * mass) + om;
    });
    Eigen::VectorXcd g(n);
    for (int k = 0; k < n; ++k) {
        const std::size_t mi = modes.mode_indices[static_cast<std::size_t>(k)];
        g(k) = weight * disp.tau[mi] * Wh.values[mi];
    }
    const SpMat H = diag + linear_coupling(basis, g);

    CVec v(basis.dim(), Complex{0.0, 0.0});
    v[0] = Complex{1.0, 0.0};  // vacuum start
    v[basis.dim() - 1] = Complex{0.01, 0.0};
    return lanczos_ground_state(linop_from_sparse(H), v, 40, 60, tol);
}

}  // namespace polaron
