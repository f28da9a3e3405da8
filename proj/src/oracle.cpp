#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "potentials.hpp"

namespace polaron {

void ScalingParams::validate() const {
    if (!(rho > 0.0) || !(lambda > 0.0)) throw std::invalid_argument("ScalingParams: rho, Lambda > 0");
    if (n_bosons < 1) throw std::invalid_argument("ScalingParams: N >= 1");
    if (!(mass > 0.0)) throw std::invalid_argument("ScalingParams: mass > 0");
    if (!(s > 0.0 && s < 1.0 / 3.0)) throw std::invalid_argument("ScalingParams: s in (0, 1/3)");
}

// ---------------------------------------------------------------- rotated

RotatedBasis RotatedBasis::build(const Field& phi, double lambda, int n_modes) {
    const GridSpec& g = phi.grid;
    if (n_modes < 1 || static_cast<std::size_t>(n_modes) > g.size())
        throw std::invalid_argument("RotatedBasis: mode count out of range");
    const double nrm = phi.norm2();
    if (std::abs(nrm / std::sqrt(lambda) - 1.0) > 1e-8)
        throw std::invalid_argument("RotatedBasis: ||phi|| must equal sqrt(Lambda)");

    RotatedBasis b;
    b.grid = g;
    const double hd = g.cell_volume();

    CVec u0 = phi.values;
    for (auto& v : u0) v /= nrm;
    b.u.push_back(std::move(u0));

    // candidate plane waves by |p|^2 then lex momentum index, p = 0 skipped
    struct Cand {
        double p2;
        std::vector<int> idx;
        std::size_t flat;
    };
    std::vector<Cand> cands;
    int idx[3];
    for (std::size_t i = 1; i < g.size(); ++i) {
        g.unflatten(i, idx);
        cands.push_back({g.momentum_sq(i), std::vector<int>(idx, idx + g.dim), i});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& c) {
        if (a.p2 != c.p2) return a.p2 < c.p2;
        return a.idx < c.idx;
    });

    const double vol = std::pow(g.box_length, g.dim);
    double x[3], p[3];
    for (const auto& cand : cands) {
        if (b.count() >= n_modes) break;
        CVec w(g.size());
        g.unflatten(cand.flat, idx);
        for (int a = 0; a < g.dim; ++a) p[a] = g.momentum(idx[a]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            g.position(i, x);
            double ph = 0.0;
            for (int a = 0; a < g.dim; ++a) ph += p[a] * x[a];
            w[i] = Complex{std::cos(ph), std::sin(ph)} / std::sqrt(vol);
        }
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& prev : b.u) {
                Complex ov{0.0, 0.0};
                for (std::size_t i = 0; i < g.size(); ++i) ov += std::conj(prev[i]) * w[i];
                ov *= hd;
                for (std::size_t i = 0; i < g.size(); ++i) w[i] -= ov * prev[i];
            }
        double n2 = 0.0;
        for (const auto& z : w) n2 += std::norm(z);
        n2 = std::sqrt(n2 * hd);
        if (n2 < 1e-8) continue;  // degenerate direction, skip
        for (auto& z : w) z /= n2;
        b.u.push_back(std::move(w));
    }
    if (b.count() != n_modes)
        throw std::runtime_error("RotatedBasis: could not complete the requested family");
    return b;
}

Complex RotatedBasis::inner(int i, const CVec& f) const {
    Complex s{0.0, 0.0};
    const auto& ui = u[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < f.size(); ++k) s += std::conj(ui[k]) * f[k];
    return s * grid.cell_volume();
}

double RotatedBasis::unitarity_defect() const {
    double worst = 0.0;
    for (int i = 0; i < count(); ++i)
        for (int j = 0; j < count(); ++j) {
            const Complex ov = inner(i, u[static_cast<std::size_t>(j)]);
            worst = std::max(worst, std::abs(ov - (i == j ? Complex{1.0, 0.0} : Complex{0.0, 0.0})));
        }
    return worst;
}

Eigen::MatrixXcd RotatedBasis::compress(const std::function<CVec(const CVec&)>& op) const {
    const int n = count();
    Eigen::MatrixXcd A(n, n);
    for (int j = 0; j < n; ++j) {
        const CVec col = op(u[static_cast<std::size_t>(j)]);
        for (int i = 0; i < n; ++i) A(i, j) = inner(i, col);
    }
    return A;
}

Eigen::MatrixXcd RotatedBasis::overlap(const RotatedBasis& other) const {
    const int n = count(), m = other.count();
    Eigen::MatrixXcd G(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) G(i, j) = inner(i, other.u[static_cast<std::size_t>(j)]);
    return G;
}

std::vector<Complex> two_body_tensor(const RotatedBasis& basis, const Field& V) {
    const int n = basis.count();
    const GridSpec& g = basis.grid;
    std::vector<Complex> V4(static_cast<std::size_t>(n) * n * n * n, Complex{0.0, 0.0});
    auto at = [&](int m, int nn, int p, int q) -> Complex& {
        return V4[static_cast<std::size_t>(((m * n + nn) * n + p) * n + q)];
    };
    const double hd = g.cell_volume();
    for (int nn = 0; nn < n; ++nn)
        for (int q = 0; q < n; ++q) {
            Field inner(g, Space::Position);
            for (std::size_t i = 0; i < g.size(); ++i)
                inner.values[i] = std::conj(basis.u[static_cast<std::size_t>(nn)][i]) *
                                  basis.u[static_cast<std::size_t>(q)][i];
            const Field w = convolve(V, inner);
            for (int m = 0; m < n; ++m)
                for (int p = 0; p < n; ++p) {
                    Complex acc{0.0, 0.0};
                    for (std::size_t i = 0; i < g.size(); ++i)
                        acc += std::conj(basis.u[static_cast<std::size_t>(m)][i]) *
                               basis.u[static_cast<std::size_t>(p)][i] * w.values[i];
                    at(m, nn, p, q) = acc * hd;
                }
        }
    return V4;
}

// ----------------------------------------------------------------- gamma

namespace {

// permanent by Ryser's formula; k <= 8
Complex permanent(const Eigen::MatrixXcd& A) {
    const int k = static_cast<int>(A.rows());
    if (k == 0) return Complex{1.0, 0.0};
    Complex total{0.0, 0.0};
    const unsigned full = 1u << k;
    for (unsigned mask = 1; mask < full; ++mask) {
        Complex prod{1.0, 0.0};
        for (int i = 0; i < k; ++i) {
            Complex row{0.0, 0.0};
            for (int j = 0; j < k; ++j)
                if (mask & (1u << j)) row += A(i, j);
            prod *= row;
        }
        const int bits = __builtin_popcount(mask);
        if ((k - bits) % 2 == 0)
            total += prod;
        else
            total -= prod;
    }
    return total;
}

double fact(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

bool is_monomial(const Eigen::MatrixXcd& G, std::vector<int>& row_of, std::vector<Complex>& val_of) {
    const int rows = static_cast<int>(G.rows());
    const int cols = static_cast<int>(G.cols());
    row_of.assign(static_cast<std::size_t>(cols), -1);
    val_of.assign(static_cast<std::size_t>(cols), Complex{0.0, 0.0});
    std::vector<bool> used(static_cast<std::size_t>(rows), false);
    for (int j = 0; j < cols; ++j) {
        int hit = -1;
        for (int i = 0; i < rows; ++i) {
            if (std::abs(G(i, j)) > 1e-13) {
                if (hit >= 0) return false;
                hit = i;
            }
        }
        if (hit < 0 || used[static_cast<std::size_t>(hit)]) return false;
        used[static_cast<std::size_t>(hit)] = true;
        row_of[static_cast<std::size_t>(j)] = hit;
        val_of[static_cast<std::size_t>(j)] = G(hit, j);
    }
    return true;
}

}  // namespace

SpMat gamma_matrix(const FockBasis& out_basis, const Eigen::MatrixXcd& G,
                   const FockBasis& in_basis) {
    if (G.rows() != out_basis.n_modes || G.cols() != in_basis.n_modes)
        throw std::invalid_argument("gamma_matrix: size mismatch");
    std::vector<Eigen::Triplet<Complex>> trips;

    std::vector<int> row_of;
    std::vector<Complex> val_of;
    if (is_monomial(G, row_of, val_of)) {
        for (std::size_t s = 0; s < in_basis.dim(); ++s) {
            const auto& occ = in_basis.states[s];
            std::vector<std::uint8_t> target(static_cast<std::size_t>(out_basis.n_modes), 0);
            Complex amp{1.0, 0.0};
            for (int j = 0; j < in_basis.n_modes; ++j) {
                const int nj = occ[static_cast<std::size_t>(j)];
                if (nj == 0) continue;
                target[static_cast<std::size_t>(row_of[static_cast<std::size_t>(j)])] +=
                    static_cast<std::uint8_t>(nj);
                for (int r = 0; r < nj; ++r) amp *= val_of[static_cast<std::size_t>(j)];
            }
            const long t = out_basis.index_of(target);
            if (t >= 0)
                trips.emplace_back(static_cast<int>(t), static_cast<int>(s), amp);
        }
        SpMat M(static_cast<int>(out_basis.dim()), static_cast<int>(in_basis.dim()));
        M.setFromTriplets(trips.begin(), trips.end());
        return M;
    }

    for (std::size_t s = 0; s < in_basis.dim(); ++s) {
        const auto& occ_in = in_basis.states[s];
        const int total = in_basis.total(s);
        // norm factor of the input state
        double fin = 1.0;
        for (auto v : occ_in) fin *= fact(v);
        for (std::size_t t = 0; t < out_basis.dim(); ++t) {
            if (out_basis.total(t) != total) continue;
            const auto& occ_out = out_basis.states[t];
            // screen: every occupied output row needs support on occupied cols
            bool possible = true;
            for (int i = 0; i < out_basis.n_modes && possible; ++i) {
                if (occ_out[static_cast<std::size_t>(i)] == 0) continue;
                bool any = false;
                for (int j = 0; j < in_basis.n_modes; ++j)
                    if (occ_in[static_cast<std::size_t>(j)] > 0 && std::abs(G(i, j)) > 1e-15) {
                        any = true;
                        break;
                    }
                if (!any) possible = false;
            }
            if (!possible) continue;
            // expanded matrix: rows repeated per output occupation, cols per input
            Eigen::MatrixXcd A(total, total);
            int r = 0;
            for (int i = 0; i < out_basis.n_modes; ++i)
                for (int rep = 0; rep < occ_out[static_cast<std::size_t>(i)]; ++rep, ++r) {
                    int c = 0;
                    for (int j = 0; j < in_basis.n_modes; ++j)
                        for (int rep2 = 0; rep2 < occ_in[static_cast<std::size_t>(j)]; ++rep2, ++c)
                            A(r, c) = G(i, j);
                }
            double fout = 1.0;
            for (auto v : occ_out) fout *= fact(v);
            const Complex val = permanent(A) / std::sqrt(fin * fout);
            if (std::abs(val) > 1e-300)
                trips.emplace_back(static_cast<int>(t), static_cast<int>(s), val);
        }
    }
    SpMat M(static_cast<int>(out_basis.dim()), static_cast<int>(in_basis.dim()));
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

// ------------------------------------------------------------------ micro

void MicroHamiltonian::apply(const CVec& in, CVec& out) const {
    const int nx = space->imp.n_x;
    const auto fd = static_cast<Eigen::Index>(space->sector.dim());
    out.assign(in.size(), Complex{0.0, 0.0});
    using RowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> vin(in.data(), nx, fd);
    Eigen::Map<RowMat> vout(out.data(), nx, fd);
    vout.noalias() = kin_x * vin;
    for (int ix = 0; ix < nx; ++ix) {
        vout.row(ix).transpose() += bose_static * vin.row(ix).transpose();
        vout.row(ix).transpose() += w_part[static_cast<std::size_t>(ix)] * vin.row(ix).transpose();
    }
}

LinOp MicroHamiltonian::linop() const {
    LinOp op;
    op.dim = space->dim();
    op.apply = [this](const CVec& in, CVec& out) { this->apply(in, out); };
    return op;
}

namespace {

CVec apply_kinetic_grid(const GridSpec& g, const CVec& f) {
    Field fld(g, Space::Position, f);
    Field fh = fourier(fld, Space::Momentum);
    for (std::size_t i = 0; i < g.size(); ++i) fh.values[i] *= 0.5 * g.momentum_sq(i);
    return fourier(fh, Space::Position).values;
}

long impurity_cells(const GridSpec& g, const ImpurityGrid& imp, int ix) {
    if (g.points_per_axis % imp.n_x != 0)
        throw std::invalid_argument("oracle: impurity grid must divide the boson grid");
    return static_cast<long>(g.points_per_axis / imp.n_x) * ix;
}

}  // namespace

MicroHamiltonian build_H_rho(const ScalingParams& params, const RotatedBasis& basis,
                             const Field& V, const Field& W,
                             std::shared_ptr<const MicroSpace> space) {
    params.validate();
    if (space->sector.n_modes != basis.count())
        throw std::invalid_argument("build_H_rho: basis/sector size mismatch");
    const std::size_t state_bytes = space->dim() * sizeof(Complex);
    if (state_bytes > (512u << 20))
        throw std::invalid_argument("build_H_rho: state dimension beyond the oracle guard");

    MicroHamiltonian H;
    H.space = space;
    H.kin_x = space->imp.kinetic() ;
    // impurity mass enters through the grid's kinetic
    const GridSpec& g = basis.grid;

    const Eigen::MatrixXcd kin =
        basis.compress([&](const CVec& f) { return apply_kinetic_grid(g, f); });
    const std::vector<Complex> V4 = two_body_tensor(basis, V);
    H.bose_static = dGamma(space->sector, kin) + quartic_op(space->sector, V4, 0.5 / params.rho);

    H.w_part.resize(static_cast<std::size_t>(space->imp.n_x));
    const double wpref = 1.0 / std::sqrt(params.rho);
    for (int ix = 0; ix < space->imp.n_x; ++ix) {
        const Field Wx = shift_field(W, impurity_cells(g, space->imp, ix));
        const Eigen::MatrixXcd wmat = basis.compress([&](const CVec& f) {
            CVec out(f.size());
            for (std::size_t i = 0; i < f.size(); ++i) out[i] = Wx.values[i] * f[i];
            return out;
        });
        H.w_part[static_cast<std::size_t>(ix)] = wpref * dGamma(space->sector, wmat);
    }
    return H;
}

SpMat excitation_map_matrix(const RotatedBasis& b0, const RotatedBasis& bt,
                            const FockBasis& sector, const FockBasis& exbasis) {
    const int n = b0.count();
    if (bt.count() != n || sector.n_modes != n || exbasis.n_modes != n)
        throw std::invalid_argument("excitation_map_matrix: size mismatch");
    const int N = sector.n_max;

    // rotate sector coordinates into the time-t frame
    const Eigen::MatrixXcd A = bt.overlap(b0);
    const SpMat GA = gamma_matrix(sector, A, sector);

    // drop the condensate mode
    const FockBasis small = FockBasis::truncated(n - 1, N);
    std::vector<Eigen::Triplet<Complex>> dtrips;
    for (std::size_t s = 0; s < sector.dim(); ++s) {
        const auto& occ = sector.states[s];
        std::vector<std::uint8_t> rest(occ.begin() + 1, occ.end());
        const long t = small.index_of(rest);
        if (t >= 0) dtrips.emplace_back(static_cast<int>(t), static_cast<int>(s), Complex{1.0, 0.0});
    }
    SpMat drop(static_cast<int>(small.dim()), static_cast<int>(sector.dim()));
    drop.setFromTriplets(dtrips.begin(), dtrips.end());

    // express the time-t excitation modes in ambient coordinates
    const Eigen::MatrixXcd C = b0.overlap(bt).rightCols(n - 1);
    const SpMat GC = gamma_matrix(exbasis, C, small);
    return SpMat(GC * SpMat(drop * GA));
}

// ------------------------------------------------------------- remainders

namespace {

SpMat pair_raise(const FockBasis& basis, const Eigen::MatrixXcd& B) {
    const int m = basis.n_modes;
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
                if (t >= 0)
                    trips.emplace_back(static_cast<int>(t), static_cast<int>(s), B(mm, nn) * amp);
            }
    }
    SpMat X(static_cast<int>(basis.dim()), static_cast<int>(basis.dim()));
    X.setFromTriplets(trips.begin(), trips.end());
    return X;
}

// sum_{mnp} T[m,n,p] a*_m a_n a_p
SpMat cubic_raise(const FockBasis& basis, const std::vector<Complex>& T, int m) {
    auto at = [&](int a, int b, int c) {
        return T[static_cast<std::size_t>((a * m + b) * m + c)];
    };
    std::vector<Eigen::Triplet<Complex>> trips;
    for (std::size_t s = 0; s < basis.dim(); ++s) {
        const auto& occ = basis.states[s];
        for (int p = 0; p < m; ++p) {
            if (occ[static_cast<std::size_t>(p)] == 0) continue;
            for (int nn = 0; nn < m; ++nn) {
                const double np = occ[static_cast<std::size_t>(p)];
                const double nn_eff = occ[static_cast<std::size_t>(nn)] - (nn == p ? 1.0 : 0.0);
                if (nn_eff < 1.0) continue;
                const double amp1 = std::sqrt(np * nn_eff);
                std::vector<std::uint8_t> mid = occ;
                mid[static_cast<std::size_t>(p)] -= 1;
                mid[static_cast<std::size_t>(nn)] -= 1;
                for (int mm = 0; mm < m; ++mm) {
                    const Complex v = at(mm, nn, p);
                    if (v == Complex{0.0, 0.0}) continue;
                    std::vector<std::uint8_t> target = mid;
                    const double amp2 = std::sqrt(target[static_cast<std::size_t>(mm)] + 1.0);
                    target[static_cast<std::size_t>(mm)] += 1;
                    const long t = basis.index_of(target);
                    if (t >= 0)
                        trips.emplace_back(static_cast<int>(t), static_cast<int>(s), v * amp1 * amp2);
                }
            }
        }
    }
    SpMat X(static_cast<int>(basis.dim()), static_cast<int>(basis.dim()));
    X.setFromTriplets(trips.begin(), trips.end());
    return X;
}

// a(f) from mode coefficients f_k = <u_k, f>
SpMat lower_vector(const FockBasis& basis, const Eigen::VectorXcd& f) {
    const int m = basis.n_modes;
    std::vector<Eigen::Triplet<Complex>> trips;
    for (std::size_t s = 0; s < basis.dim(); ++s) {
        const auto& occ = basis.states[s];
        for (int k = 0; k < m; ++k) {
            if (occ[static_cast<std::size_t>(k)] == 0 || f(k) == Complex{0.0, 0.0}) continue;
            std::vector<std::uint8_t> target = occ;
            const double amp = std::sqrt(static_cast<double>(target[static_cast<std::size_t>(k)]));
            target[static_cast<std::size_t>(k)] -= 1;
            const long t = basis.index_of(target);
            if (t >= 0)
                trips.emplace_back(static_cast<int>(t), static_cast<int>(s), std::conj(f(k)) * amp);
        }
    }
    SpMat X(static_cast<int>(basis.dim()), static_cast<int>(basis.dim()));
    X.setFromTriplets(trips.begin(), trips.end());
    return X;
}

int excited_total(const std::vector<std::uint8_t>& occ) {
    int t = 0;
    for (std::size_t j = 1; j < occ.size(); ++j) t += occ[j];
    return t;
}

}  // namespace

RemainderSet build_remainders(const ScalingParams& params, const RotatedBasis& b0,
                              const Field& phi, double mu, const Field& V, const Field& W,
                              const ImpurityGrid& imp, const FockBasis& exbasis) {
    params.validate();
    const GridSpec& g = b0.grid;
    const int n = b0.count();
    const double N = params.n_bosons;
    const double rho = params.rho;
    const double lambda = params.lambda;

    CondensateState st{phi, 0.0, lambda, mu};
    KernelPair kern = build_kernels(st, V);
    Field density = pointwise(conj(phi), phi);
    Field meanV = convolve(V, density);

    // group (i): -1/2 dGamma(Q [V*|phi|^2 + K1 - mu] Q) Nplus / N
    const Eigen::MatrixXcd Y = b0.compress([&](const CVec& f) {
        CVec q = kern.apply_Q(f);
        CVec out(q.size());
        for (std::size_t i = 0; i < q.size(); ++i)
            out[i] = (meanV.values[i].real() - mu) * q[i];
        const CVec k1 = kern.apply_K1(f);
        for (std::size_t i = 0; i < q.size(); ++i) out[i] += k1[i];
        return kern.apply_Q(out);
    });
    const SpMat nplus = diagonal_op(exbasis, [](const std::vector<std::uint8_t>& occ) {
        return static_cast<double>(excited_total(occ));
    });
    SpMat X = SpMat((-0.5 / N) * (dGamma(exbasis, Y) * nplus));

    // group (ii): -((Nplus + 1) sqrt(N - Nplus) / N) a(Q[V*|phi|^2 phi] / sqrt(Lambda))
    Eigen::VectorXcd f2(n);
    {
        CVec v(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            v[i] = meanV.values[i].real() * phi.values[i] / std::sqrt(lambda);
        const CVec qv = kern.apply_Q(v);
        for (int k = 0; k < n; ++k) f2(k) = b0.inner(k, qv);
    }
    const SpMat d2 = diagonal_op(exbasis, [&](const std::vector<std::uint8_t>& occ) {
        const double np = excited_total(occ);
        return (np + 1.0) * std::sqrt(std::max(0.0, N - np)) / N;
    });
    X -= SpMat(d2 * lower_vector(exbasis, f2));

    // groups (iii) and (iv) need the two-body tensor
    const std::vector<Complex> V4 = two_body_tensor(b0, V);
    auto v4 = [&](int a, int b, int c, int d) {
        return V4[static_cast<std::size_t>(((a * n + b) * n + c) * n + d)];
    };

    Eigen::MatrixXcd B3 = Eigen::MatrixXcd::Zero(n, n);
    for (int mm = 1; mm < n; ++mm)
        for (int nn = 1; nn < n; ++nn) B3(mm, nn) = v4(mm, nn, 0, 0);
    const SpMat d3 = diagonal_op(exbasis, [&](const std::vector<std::uint8_t>& occ) {
        const double np = excited_total(occ);
        if (N - np < 2.0) return 0.0;  // the raising factor truncates here anyway
        return std::sqrt((N - np - 1.0) * (N - np)) - N;
    });
    X += SpMat((0.5 / rho) * (pair_raise(exbasis, B3) * d3));

    std::vector<Complex> T(static_cast<std::size_t>(n) * n * n, Complex{0.0, 0.0});
    for (int mm = 1; mm < n; ++mm)
        for (int nn = 1; nn < n; ++nn)
            for (int pp = 1; pp < n; ++pp)
                T[static_cast<std::size_t>((mm * n + nn) * n + pp)] = lambda * v4(0, mm, nn, pp);
    const SpMat d4 = diagonal_op(exbasis, [&](const std::vector<std::uint8_t>& occ) {
        return std::sqrt(std::max(0.0, N - excited_total(occ))) / N;
    });
    X += SpMat(d4 * cubic_raise(exbasis, T, n));

    // group (v): (mu / 2) Nplus / N
    X += SpMat((0.5 * mu / N) * nplus);

    RemainderSet out;
    out.r1 = X + SpMat(X.adjoint());

    // R2: excited-only quartic, prefactor Lambda / (2N)
    std::vector<Complex> V4ex = V4;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d)
                    if (a == 0 || b == 0 || c == 0 || d == 0)
                        V4ex[static_cast<std::size_t>(((a * n + b) * n + c) * n + d)] =
                            Complex{0.0, 0.0};
    out.r2 = quartic_op(exbasis, V4ex, 0.5 * lambda / N);

    // R3, R4 per impurity point
    const SpMat d_r3 = diagonal_op(exbasis, [&](const std::vector<std::uint8_t>& occ) {
        const double np = excited_total(occ);
        return (std::sqrt(std::max(0.0, N - np)) - std::sqrt(N)) / std::sqrt(N);
    });
    out.r3.resize(static_cast<std::size_t>(imp.n_x));
    out.r4.resize(static_cast<std::size_t>(imp.n_x));
    out.meanfield.resize(static_cast<std::size_t>(imp.n_x));
    Field meanW = convolve(W, density);
    for (int ix = 0; ix < imp.n_x; ++ix) {
        const long cells = impurity_cells(g, imp, ix);
        const Field Wx = shift_field(W, cells);
        Eigen::VectorXcd fw(n);
        {
            Field f = pointwise(Wx, phi);
            const CVec qf = kern.apply_Q(f.values);
            for (int k = 0; k < n; ++k) fw(k) = b0.inner(k, qf);
        }
        SpMat Y3 = SpMat(SpMat(lower_vector(exbasis, fw)).adjoint() * d_r3);
        out.r3[static_cast<std::size_t>(ix)] = Y3 + SpMat(Y3.adjoint());

        const Eigen::MatrixXcd QWQ = b0.compress([&](const CVec& f) {
            CVec q = kern.apply_Q(f);
            for (std::size_t i = 0; i < q.size(); ++i) q[i] *= Wx.values[i];
            return kern.apply_Q(q);
        });
        int mfidx[3] = {static_cast<int>(cells % g.points_per_axis), 0, 0};
        const double mf = meanW.values[g.flatten(mfidx)].real();
        // the number-weighted counter term carries (W*|phi|^2)/Lambda, matching
        // the (N - N_+)/Lambda bookkeeping of the condensate matrix element
        out.r4[static_cast<std::size_t>(ix)] =
            SpMat((1.0 / std::sqrt(rho)) * dGamma(exbasis, QWQ)) -
            SpMat((mf / (std::sqrt(rho) * lambda)) * nplus);
        out.meanfield[static_cast<std::size_t>(ix)] = std::sqrt(rho) * mf;
    }
    return out;
}

// ------------------------------------------------------------ experiments

namespace {

// effective generator pieces in the ambient family at one Hartree snapshot
struct XiGenerator {
    Eigen::MatrixXcd kin_x;
    SpMat bose;                      // dGamma(h + K1) + pair part
    std::vector<SpMat> coupling;     // per impurity point: a(QW_x phi) + h.c.
    std::vector<double> meanfield;   // rho^{1/2} W*|phi_t|^2(x)
};

XiGenerator assemble_xi(const RotatedBasis& b0, const Field& phi, double mu, double lambda,
                        const Field& V, const Field& W, const ImpurityGrid& imp,
                        const FockBasis& exbasis, double rho, double mass, bool with_meanfield) {
    const GridSpec& g = b0.grid;
    CondensateState st{phi, 0.0, lambda, mu};
    KernelPair kern = build_kernels(st, V);
    Field density = pointwise(conj(phi), phi);
    Field meanV = convolve(V, density);

    XiGenerator gen;
    ImpurityGrid imp2 = imp;
    imp2.mass = mass;
    gen.kin_x = imp2.kinetic();

    const Eigen::MatrixXcd one_body = b0.compress([&](const CVec& f) {
        CVec out = apply_kinetic_grid(g, f);
        for (std::size_t i = 0; i < g.size(); ++i)
            out[i] += (meanV.values[i].real() - mu) * f[i];
        const CVec k1 = kern.apply_K1(f);
        for (std::size_t i = 0; i < g.size(); ++i) out[i] += k1[i];
        return out;
    });
    const int n = b0.count();
    Eigen::MatrixXcd pair(n, n);
    for (int j = 0; j < n; ++j) {
        const CVec col = kern.apply_K2J(b0.u[static_cast<std::size_t>(j)]);
        for (int i = 0; i < n; ++i) pair(i, j) = b0.inner(i, col);
    }
    gen.bose = dGamma(exbasis, one_body) + pair_quadratic(exbasis, pair);

    Field meanW = convolve(W, density);
    gen.coupling.resize(static_cast<std::size_t>(imp.n_x));
    gen.meanfield.assign(static_cast<std::size_t>(imp.n_x), 0.0);
    for (int ix = 0; ix < imp.n_x; ++ix) {
        const long cells = impurity_cells(g, imp, ix);
        const Field Wx = shift_field(W, cells);
        Field f = pointwise(Wx, phi);
        const CVec qf = kern.apply_Q(f.values);
        Eigen::VectorXcd coeff(n);
        for (int k = 0; k < n; ++k) coeff(k) = b0.inner(k, qf);
        gen.coupling[static_cast<std::size_t>(ix)] = linear_coupling(exbasis, coeff);
        if (with_meanfield) {
            int idx[3] = {static_cast<int>(cells % g.points_per_axis), 0, 0};
            gen.meanfield[static_cast<std::size_t>(ix)] =
                std::sqrt(rho) * meanW.values[g.flatten(idx)].real();
        }
    }
    return gen;
}

void apply_xi(const XiGenerator& gen, int nx, std::size_t fd, const CVec& in, CVec& out) {
    out.assign(in.size(), Complex{0.0, 0.0});
    using RowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> vin(in.data(), nx, static_cast<Eigen::Index>(fd));
    Eigen::Map<RowMat> vout(out.data(), nx, static_cast<Eigen::Index>(fd));
    vout.noalias() = gen.kin_x * vin;
    for (int ix = 0; ix < nx; ++ix) {
        vout.row(ix).transpose() += gen.bose * vin.row(ix).transpose();
        vout.row(ix).transpose() += gen.coupling[static_cast<std::size_t>(ix)] * vin.row(ix).transpose();
        if (gen.meanfield[static_cast<std::size_t>(ix)] != 0.0)
            vout.row(ix) += gen.meanfield[static_cast<std::size_t>(ix)] * vin.row(ix);
    }
}

}  // namespace

DecompositionResult verify_decomposition(const OracleConfig& cfg, double t0, double delta,
                                         int n_states, unsigned seed) {
    cfg.params.validate();
    if (t0 < delta) throw std::invalid_argument("verify_decomposition: need t0 >= delta");
    if (std::abs(cfg.params.rho * cfg.params.lambda - cfg.params.n_bosons) > 1e-9)
        throw std::invalid_argument("verify_decomposition: the identity requires N = rho * Lambda");
    const GridSpec& g = cfg.grid;
    const int n = cfg.n_modes;
    const int N = cfg.params.n_bosons;
    const double lambda = cfg.params.lambda;

    CondensateState init = build_initial_condensate(cfg.profile, lambda, g, cfg.V);
    HartreeOptions hopts;
    hopts.dt = cfg.hartree_dt;
    hopts.sample_times = {t0 - delta, t0, t0 + delta};
    HartreeTrajectory traj = evolve_hartree(init, cfg.V, t0 + delta, hopts);

    const RotatedBasis b0 = RotatedBasis::build(traj.at_time(t0), lambda, n);
    const RotatedBasis bm = RotatedBasis::build(traj.at_time(t0 - delta), lambda, n);
    const RotatedBasis bp = RotatedBasis::build(traj.at_time(t0 + delta), lambda, n);
    const double mu = traj.mu_at(t0);
    const Field& phi = traj.at_time(t0);

    const FockBasis sector = FockBasis::sector(n, N);
    const FockBasis exbasis = FockBasis::truncated(n, N);
    ImpurityGrid imp{cfg.n_x, g.box_length, cfg.params.mass};

    auto space = std::make_shared<MicroSpace>();
    space->imp = imp;
    space->sector = sector;
    const MicroHamiltonian Hrho = build_H_rho(cfg.params, b0, cfg.V, cfg.W, space);

    const SpMat U0 = excitation_map_matrix(b0, b0, sector, exbasis);
    const SpMat Up = excitation_map_matrix(b0, bp, sector, exbasis);
    const SpMat Um = excitation_map_matrix(b0, bm, sector, exbasis);
    const SpMat dU = SpMat(Complex{0.0, 1.0} / (2.0 * delta) * SpMat(SpMat(Up - Um) * SpMat(U0.adjoint())));
    const SpMat U0c = SpMat(U0.conjugate());
    const SpMat U0t = SpMat(U0.transpose());
    const SpMat dUt = SpMat(dU.transpose());

    DecompositionResult res;
    {
        Eigen::MatrixXcd isom = Eigen::MatrixXcd(SpMat(SpMat(U0.adjoint()) * U0));
        isom -= Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(sector.dim()),
                                           static_cast<Eigen::Index>(sector.dim()));
        res.map_isometry_defect = isom.norm();
    }

    // RHS pieces
    CondensateState st{phi, t0, lambda, mu};
    KernelPair kern = build_kernels(st, cfg.V);
    XiGenerator rhs = assemble_xi(b0, phi, mu, lambda, cfg.V, cfg.W, imp, exbasis,
                                  cfg.params.rho, cfg.params.mass, true);
    RemainderSet rem = build_remainders(cfg.params, b0, phi, mu, cfg.V, cfg.W, imp, exbasis);

    const std::size_t fd = exbasis.dim();
    const std::size_t sd = sector.dim();
    const int nx = imp.n_x;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    double acc = 0.0;
    for (int trial = 0; trial < n_states; ++trial) {
        // random excitation-supported state (no condensate-mode occupation)
        CVec psi(static_cast<std::size_t>(nx) * fd, Complex{0.0, 0.0});
        for (int ix = 0; ix < nx; ++ix)
            for (std::size_t s = 0; s < fd; ++s) {
                if (exbasis.states[s][0] != 0) continue;
                psi[static_cast<std::size_t>(ix) * fd + s] = Complex{dist(rng), dist(rng)};
            }
        double nrm = 0.0;
        for (const auto& z : psi) nrm += std::norm(z);
        nrm = std::sqrt(nrm);
        for (auto& z : psi) z /= nrm;

        // LHS: (I (x) U0) H_rho (I (x) U0^+) + i dU/dt U0^+ per impurity slice
        using RowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        Eigen::Map<const RowMat> pin(psi.data(), nx, static_cast<Eigen::Index>(fd));
        RowMat down(nx, static_cast<Eigen::Index>(sd));
        down = pin * U0c;  // (U0^+ psi_slice): rows act from the right
        CVec downv(static_cast<std::size_t>(nx) * sd);
        Eigen::Map<RowMat>(downv.data(), nx, static_cast<Eigen::Index>(sd)) = down;
        CVec hdown(downv.size());
        Hrho.apply(downv, hdown);
        Eigen::Map<const RowMat> hd(hdown.data(), nx, static_cast<Eigen::Index>(sd));
        RowMat lhs_m = hd * U0t;  // U0 applied per slice
        lhs_m += pin * dUt;
        CVec lhs(lhs_m.data(), lhs_m.data() + lhs_m.size());

        // RHS
        CVec rhsv(psi.size());
        apply_xi(rhs, nx, fd, psi, rhsv);
        Eigen::Map<RowMat> rv(rhsv.data(), nx, static_cast<Eigen::Index>(fd));
        for (int ix = 0; ix < nx; ++ix) {
            rv.row(ix).transpose() += rem.r1 * pin.row(ix).transpose();
            rv.row(ix).transpose() += rem.r2 * pin.row(ix).transpose();
            rv.row(ix).transpose() += rem.r3[static_cast<std::size_t>(ix)] * pin.row(ix).transpose();
            rv.row(ix).transpose() += rem.r4[static_cast<std::size_t>(ix)] * pin.row(ix).transpose();
        }
        for (std::size_t i = 0; i < rhsv.size(); ++i) rhsv[i] -= mu * psi[i];

        double diff = 0.0;
        for (std::size_t i = 0; i < rhsv.size(); ++i) diff += std::norm(lhs[i] - rhsv[i]);
        const double r = std::sqrt(diff);
        acc += r;
        res.max_residual = std::max(res.max_residual, r);
    }
    res.mean_residual = acc / std::max(1, n_states);
    return res;
}

ConvergencePoint bf_convergence_point(const OracleConfig& cfg, double t_final, double dt,
                                      int krylov_dim, bool seed_excitation) {
    cfg.params.validate();
    const GridSpec& g = cfg.grid;
    const int n = cfg.n_modes;
    if (static_cast<std::size_t>(n) != g.size())
        throw std::invalid_argument("bf_convergence_point: needs the full grid family");
    const int N = cfg.params.n_bosons;
    const double lambda = cfg.params.lambda;
    const double rho = cfg.params.rho;
    if (std::abs(rho * lambda - N) > 1e-9)
        throw std::invalid_argument("bf_convergence_point: requires N = rho * Lambda");

    CondensateState init = build_initial_condensate(cfg.profile, lambda, g, cfg.V);
    HartreeOptions hopts;
    hopts.dt = cfg.hartree_dt;
    const long n_steps = std::max<long>(1, std::lround(std::ceil(t_final / dt - 1e-12)));
    const double h = t_final / static_cast<double>(n_steps);
    for (long s = 0; s < n_steps; ++s) hopts.sample_times.push_back((s + 0.5) * h);
    hopts.sample_times.push_back(t_final);
    HartreeTrajectory traj = evolve_hartree(init, cfg.V, t_final, hopts);

    const RotatedBasis b0 = RotatedBasis::build(init.phi, lambda, n);
    const FockBasis sector = FockBasis::sector(n, N);
    const FockBasis exbasis = FockBasis::truncated(n, N);
    ImpurityGrid imp{cfg.n_x, g.box_length, cfg.params.mass};

    auto space = std::make_shared<MicroSpace>();
    space->imp = imp;
    space->sector = sector;
    const MicroHamiltonian Hrho = build_H_rho(cfg.params, b0, cfg.V, cfg.W, space);

    // initial data: gaussian impurity (x) pure condensate (+ optional seed)
    const std::size_t sd = sector.dim();
    const std::size_t fd = exbasis.dim();
    CVec micro(static_cast<std::size_t>(imp.n_x) * sd, Complex{0.0, 0.0});
    {
        std::vector<std::uint8_t> occ(static_cast<std::size_t>(n), 0);
        occ[0] = static_cast<std::uint8_t>(N);
        const long pure = sector.index_of(occ);
        long seeded = -1;
        if (seed_excitation && n > 1 && N >= 1) {
            occ[0] = static_cast<std::uint8_t>(N - 1);
            occ[1] = 1;
            seeded = sector.index_of(occ);
        }
        for (int ix = 0; ix < imp.n_x; ++ix) {
            const double x = imp.coordinate(ix);
            const Complex a{std::exp(-0.5 * x * x), 0.0};
            micro[static_cast<std::size_t>(ix) * sd + static_cast<std::size_t>(pure)] = a;
            if (seeded >= 0)
                micro[static_cast<std::size_t>(ix) * sd + static_cast<std::size_t>(seeded)] =
                    0.5 * a;
        }
        double nrm = 0.0;
        for (const auto& z : micro) nrm += std::norm(z);
        for (auto& z : micro) z /= std::sqrt(nrm);
    }

    // matching effective initial state through U_0
    const SpMat U0 = excitation_map_matrix(b0, b0, sector, exbasis);
    using RowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    CVec xi(static_cast<std::size_t>(imp.n_x) * fd);
    {
        Eigen::Map<const RowMat> min(micro.data(), imp.n_x, static_cast<Eigen::Index>(sd));
        Eigen::Map<RowMat> xout(xi.data(), imp.n_x, static_cast<Eigen::Index>(fd));
        xout = min * SpMat(U0.transpose());
    }
    CVec psi_bf = xi;

    // evolve all three
    LinOp Hmicro = Hrho.linop();
    for (long s = 0; s < n_steps; ++s) micro = krylov_expv(Hmicro, micro, Complex{0.0, -h}, krylov_dim);

    for (long s = 0; s < n_steps; ++s) {
        const double tm = (s + 0.5) * h;
        const Field& phim = traj.at_time(tm);
        const double mum = traj.mu_at(tm);
        XiGenerator gen_mid =
            assemble_xi(b0, phim, mum, lambda, cfg.V, cfg.W, imp, exbasis, rho,
                        cfg.params.mass, true);
        LinOp op;
        op.dim = xi.size();
        op.apply = [&](const CVec& in, CVec& out) { apply_xi(gen_mid, imp.n_x, fd, in, out); };
        xi = krylov_expv(op, xi, Complex{0.0, -h}, krylov_dim);

        XiGenerator gen_bf =
            assemble_xi(b0, phim, mum, lambda, cfg.V, cfg.W, imp, exbasis, rho,
                        cfg.params.mass, false);
        LinOp op2;
        op2.dim = psi_bf.size();
        op2.apply = [&](const CVec& in, CVec& out) { apply_xi(gen_bf, imp.n_x, fd, in, out); };
        psi_bf = krylov_expv(op2, psi_bf, Complex{0.0, -h}, krylov_dim);
    }

    // map the microscopic result and compare
    const RotatedBasis bT = RotatedBasis::build(traj.at_time(t_final), lambda, n);
    const SpMat UT = excitation_map_matrix(b0, bT, sector, exbasis);
    CVec mapped(static_cast<std::size_t>(imp.n_x) * fd);
    {
        Eigen::Map<const RowMat> min(micro.data(), imp.n_x, static_cast<Eigen::Index>(sd));
        Eigen::Map<RowMat> mout(mapped.data(), imp.n_x, static_cast<Eigen::Index>(fd));
        mout = min * SpMat(UT.transpose());
    }

    const double mu_int = traj.mu_integral(t_final);
    double intW = 0.0;
    for (const auto& v : cfg.W.values) intW += v.real();
    intW *= cfg.W.weight();

    ConvergencePoint out;
    out.rho = rho;
    out.lambda = lambda;
    out.n_bosons = N;
    {
        const Complex phase = std::exp(Complex{0.0, -mu_int});
        double diff = 0.0;
        for (std::size_t i = 0; i < mapped.size(); ++i)
            diff += std::norm(phase * mapped[i] - xi[i]);
        out.err_intermediate = std::sqrt(diff);
    }
    {
        const double nu = t_final * std::sqrt(rho) * intW - mu_int;
        const Complex phase = std::exp(Complex{0.0, nu});
        double diff = 0.0;
        for (std::size_t i = 0; i < mapped.size(); ++i)
            diff += std::norm(phase * mapped[i] - psi_bf[i]);
        out.err_bf = std::sqrt(diff);
    }
    return out;
}

}  // namespace polaron
