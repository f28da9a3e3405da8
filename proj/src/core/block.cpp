#include "core/block.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "core/field_io.hpp"

namespace polaron {

namespace {

std::size_t negated_index(const GridSpec& g, std::size_t flat) {
    int idx[3];
    g.unflatten(flat, idx);
    int neg[3];
    for (int a = 0; a < g.dim; ++a) neg[a] = (g.points_per_axis - idx[a]) % g.points_per_axis;
    return g.flatten(neg);
}

void require_position(const DoubledVector& F) {
    if (F.upper.space != Space::Position || F.lower.space != Space::Position)
        throw std::invalid_argument("DoubledVector must be stored in position space");
}

Eigen::VectorXcd to_eigen(const CVec& v) {
    Eigen::VectorXcd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
    return out;
}

CVec from_eigen(const Eigen::VectorXcd& v) {
    CVec out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = v(i);
    return out;
}

}  // namespace

DoubledVector::DoubledVector(Field f, Field g) : upper(std::move(f)), lower(std::move(g)) {
    if (upper.grid != lower.grid)
        throw std::invalid_argument("DoubledVector: components must share one grid");
}

double DoubledVector::norm() const {
    const double a = upper.norm2(), b = lower.norm2();
    return std::sqrt(a * a + b * b);
}

DoubledVector& DoubledVector::operator-=(const DoubledVector& o) {
    upper -= o.upper;
    lower -= o.lower;
    return *this;
}

DoubledVector& DoubledVector::operator+=(const DoubledVector& o) {
    upper += o.upper;
    lower += o.lower;
    return *this;
}

DoubledVector operator-(DoubledVector a, const DoubledVector& b) {
    a -= b;
    return a;
}

BlockOp BlockOp::identity(const GridSpec& g) {
    BlockOp op;
    op.grid = g;
    op.storage = Storage::DiagMomentum;
    op.form = Form::Map;
    op.is_symplectic_candidate = true;
    op.c_diag.assign(g.size(), Complex{1.0, 0.0});
    op.d_diag.assign(g.size(), Complex{0.0, 0.0});
    op.provenance = "identity";
    return op;
}

BlockOp BlockOp::s_matrix(const GridSpec& g) {
    // S = diag(1,-1) has generator structure (a = 1, b = 0): (f, Jg) -> (f, -Jg).
    BlockOp op;
    op.grid = g;
    op.storage = Storage::DiagMomentum;
    op.form = Form::Generator;
    op.c_diag.assign(g.size(), Complex{1.0, 0.0});
    op.d_diag.assign(g.size(), Complex{0.0, 0.0});
    op.provenance = "S";
    return op;
}

BlockOp BlockOp::dense(const GridSpec& g, Eigen::MatrixXcd c, Eigen::MatrixXcd d, Form form) {
    const auto n = static_cast<Eigen::Index>(g.size());
    if (c.rows() != n || c.cols() != n || d.rows() != n || d.cols() != n)
        throw std::invalid_argument("BlockOp::dense: block size mismatch");
    BlockOp op;
    op.grid = g;
    op.storage = Storage::Dense;
    op.form = form;
    op.c_mat = std::move(c);
    op.d_mat = std::move(d);
    return op;
}

BlockOp BlockOp::diag(const GridSpec& g, CVec c, CVec d, Form form, bool exclude_zero) {
    if (c.size() != g.size() || d.size() != g.size())
        throw std::invalid_argument("BlockOp::diag: multiplier size mismatch");
    BlockOp op;
    op.grid = g;
    op.storage = Storage::DiagMomentum;
    op.form = form;
    op.exclude_zero_mode = exclude_zero;
    op.c_diag = std::move(c);
    op.d_diag = std::move(d);
    return op;
}

BlockOp BlockOp::matrix_free(const GridSpec& g,
                             std::function<void(const CVec&, const CVec&, CVec&, CVec&)> fn,
                             Form form) {
    BlockOp op;
    op.grid = g;
    op.storage = Storage::Applier;
    op.form = form;
    op.applier = std::move(fn);
    return op;
}

DoubledVector apply_block(const BlockOp& op, const DoubledVector& F) {
    if (op.grid != F.upper.grid) throw std::invalid_argument("apply_block: grid mismatch");
    require_position(F);
    const std::size_t n = op.grid.size();
    DoubledVector out(Field(op.grid, Space::Position), Field(op.grid, Space::Position));

    const double sign = (op.form == BlockOp::Form::Map) ? 1.0 : -1.0;

    switch (op.storage) {
        case BlockOp::Storage::Dense: {
            Eigen::VectorXcd f = to_eigen(F.upper.values);
            Eigen::VectorXcd g = to_eigen(F.lower.values);
            Eigen::VectorXcd fo = op.c_mat * f + op.d_mat * g.conjugate();
            Eigen::VectorXcd go = sign * (op.c_mat * g + op.d_mat * f.conjugate());
            out.upper.values = from_eigen(fo);
            out.lower.values = from_eigen(go);
            break;
        }
        case BlockOp::Storage::DiagMomentum: {
            Field fh = fourier(F.upper, Space::Momentum);
            Field gh = fourier(F.lower, Space::Momentum);
            CVec fo(n), go(n);
            for (std::size_t p = 0; p < n; ++p) {
                const std::size_t q = negated_index(op.grid, p);
                fo[p] = op.c_diag[p] * fh.values[p] + op.d_diag[p] * std::conj(gh.values[q]);
                go[p] = sign * (op.c_diag[p] * gh.values[p] + op.d_diag[p] * std::conj(fh.values[q]));
            }
            if (op.exclude_zero_mode) {
                fo[op.grid.zero_mode_index()] = Complex{0.0, 0.0};
                go[op.grid.zero_mode_index()] = Complex{0.0, 0.0};
            }
            fh.values = std::move(fo);
            gh.values = std::move(go);
            out.upper = fourier(fh, Space::Position);
            out.lower = fourier(gh, Space::Position);
            break;
        }
        case BlockOp::Storage::Applier: {
            // appliers implement the full action, signs included
            op.applier(F.upper.values, F.lower.values, out.upper.values, out.lower.values);
            break;
        }
    }
    return out;
}

BlockOp compose(const BlockOp& A, const BlockOp& B) {
    if (A.grid != B.grid) throw std::invalid_argument("compose: grid mismatch");
    if (A.form != BlockOp::Form::Map || B.form != BlockOp::Form::Map)
        throw std::invalid_argument("compose: only Map-form operators compose");
    if (A.storage == BlockOp::Storage::DiagMomentum && B.storage == BlockOp::Storage::DiagMomentum) {
        const std::size_t n = A.grid.size();
        CVec c(n), d(n);
        for (std::size_t p = 0; p < n; ++p) {
            const std::size_t q = negated_index(A.grid, p);
            c[p] = A.c_diag[p] * B.c_diag[p] + A.d_diag[p] * std::conj(B.d_diag[q]);
            d[p] = A.c_diag[p] * B.d_diag[p] + A.d_diag[p] * std::conj(B.c_diag[q]);
        }
        BlockOp out = BlockOp::diag(A.grid, std::move(c), std::move(d), BlockOp::Form::Map,
                                    A.exclude_zero_mode || B.exclude_zero_mode);
        return out;
    }
    const BlockOp Ad = (A.storage == BlockOp::Storage::Dense) ? A : densify(A);
    const BlockOp Bd = (B.storage == BlockOp::Storage::Dense) ? B : densify(B);
    Eigen::MatrixXcd c = Ad.c_mat * Bd.c_mat + Ad.d_mat * Bd.d_mat.conjugate();
    Eigen::MatrixXcd d = Ad.c_mat * Bd.d_mat + Ad.d_mat * Bd.c_mat.conjugate();
    return BlockOp::dense(A.grid, std::move(c), std::move(d));
}

BlockOp symplectic_inverse(const BlockOp& Z) {
    if (Z.form != BlockOp::Form::Map)
        throw std::invalid_argument("symplectic_inverse: map-form operators only");
    switch (Z.storage) {
        case BlockOp::Storage::Dense:
            return BlockOp::dense(Z.grid, Z.c_mat.adjoint(), -Z.d_mat.transpose());
        case BlockOp::Storage::DiagMomentum: {
            const std::size_t n = Z.grid.size();
            CVec c(n), d(n);
            for (std::size_t p = 0; p < n; ++p) {
                // adjoint of a multiplier in the doubled coordinates
                const std::size_t q = negated_index(Z.grid, p);
                c[p] = std::conj(Z.c_diag[p]);
                d[p] = -Z.d_diag[q];
            }
            return BlockOp::diag(Z.grid, std::move(c), std::move(d), BlockOp::Form::Map,
                                 Z.exclude_zero_mode);
        }
        case BlockOp::Storage::Applier:
            throw std::invalid_argument("symplectic_inverse: matrix-free operators rejected");
    }
    throw std::logic_error("unreachable");
}

namespace {

// Per-mode doubled 2x2 for a diagonal operator. Exact because the doubled
// coordinates (fhat(p), conj ghat(-p)) close on themselves at each p.
Eigen::Matrix2cd mode_matrix(const BlockOp& op, std::size_t p, std::size_t q) {
    Eigen::Matrix2cd m;
    if (op.form == BlockOp::Form::Map) {
        m << op.c_diag[p], op.d_diag[p], std::conj(op.d_diag[q]), std::conj(op.c_diag[q]);
    } else {
        m << op.c_diag[p], op.d_diag[p], -std::conj(op.d_diag[q]), -std::conj(op.c_diag[q]);
    }
    return m;
}

}  // namespace

double symplectic_defect(const BlockOp& op) {
    if (op.storage == BlockOp::Storage::Applier)
        throw std::invalid_argument("symplectic_defect: matrix-free operators rejected");
    if (op.storage == BlockOp::Storage::DiagMomentum) {
        const Eigen::Matrix2cd S = (Eigen::Matrix2cd() << 1, 0, 0, -1).finished();
        double acc1 = 0.0, acc2 = 0.0;
        for (std::size_t p = 0; p < op.grid.size(); ++p) {
            if (op.exclude_zero_mode && p == op.grid.zero_mode_index()) continue;
            const std::size_t q = negated_index(op.grid, p);
            const Eigen::Matrix2cd m = mode_matrix(op, p, q);
            acc1 += (m * S * m.adjoint() - S).squaredNorm();
            acc2 += (m.adjoint() * S * m - S).squaredNorm();
        }
        return std::sqrt(std::max(acc1, acc2));
    }
    const Eigen::MatrixXcd W = assemble_doubled(op);
    const auto n = W.rows() / 2;
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    S.topLeftCorner(n, n).setIdentity();
    S.bottomRightCorner(n, n) = -Eigen::MatrixXcd::Identity(n, n);
    const double a = (W * S * W.adjoint() - S).norm();
    const double b = (W.adjoint() * S * W - S).norm();
    return std::max(a, b);
}

double hs_offdiag_norm(const BlockOp& op) {
    switch (op.storage) {
        case BlockOp::Storage::Dense:
            return op.d_mat.norm();
        case BlockOp::Storage::DiagMomentum: {
            double s = 0.0;
            for (std::size_t p = 0; p < op.grid.size(); ++p) {
                if (op.exclude_zero_mode && p == op.grid.zero_mode_index()) continue;
                s += std::norm(op.d_diag[p]);
            }
            return std::sqrt(s);
        }
        case BlockOp::Storage::Applier:
            throw std::invalid_argument("hs_offdiag_norm: matrix-free operators rejected");
    }
    throw std::logic_error("unreachable");
}

double op_norm(const BlockOp& op) {
    if (op.storage == BlockOp::Storage::DiagMomentum) {
        double m = 0.0;
        for (std::size_t p = 0; p < op.grid.size(); ++p) {
            if (op.exclude_zero_mode && p == op.grid.zero_mode_index()) continue;
            const std::size_t q = negated_index(op.grid, p);
            Eigen::JacobiSVD<Eigen::Matrix2cd> svd(mode_matrix(op, p, q));
            m = std::max(m, svd.singularValues()(0));
        }
        return m;
    }
    const Eigen::MatrixXcd W = assemble_doubled(op);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(W);
    return svd.singularValues()(0);
}

BlockOp densify(const BlockOp& op) {
    if (op.storage == BlockOp::Storage::Dense) return op;
    if (op.storage != BlockOp::Storage::DiagMomentum)
        throw std::invalid_argument("densify: matrix-free operators rejected");
    const std::size_t n = op.grid.size();
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXcd c(ni, ni), d(ni, ni);
    // Column-by-column F^{-1} diag F. The normalization factors cancel, so use
    // the raw DFT pair directly.
    CVec col(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(col.begin(), col.end(), Complex{0.0, 0.0});
        col[j] = Complex{1.0, 0.0};
        dft_forward(op.grid, col);
        CVec cc = col, dd = col;
        for (std::size_t p = 0; p < n; ++p) {
            cc[p] *= op.c_diag[p];
            dd[p] *= op.d_diag[p];
        }
        if (op.exclude_zero_mode) {
            cc[op.grid.zero_mode_index()] = Complex{0.0, 0.0};
            dd[op.grid.zero_mode_index()] = Complex{0.0, 0.0};
        }
        dft_backward(op.grid, cc);
        dft_backward(op.grid, dd);
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cc[i] * inv;
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dd[i] * inv;
        }
    }
    BlockOp out = BlockOp::dense(op.grid, std::move(c), std::move(d), op.form);
    out.provenance = op.provenance;
    out.timestamp = op.timestamp;
    out.is_symplectic_candidate = op.is_symplectic_candidate;
    return out;
}

Eigen::MatrixXcd assemble_doubled(const BlockOp& op) {
    const BlockOp dn = densify(op);
    const auto n = dn.c_mat.rows();
    Eigen::MatrixXcd W(2 * n, 2 * n);
    W.topLeftCorner(n, n) = dn.c_mat;
    W.topRightCorner(n, n) = dn.d_mat;
    if (dn.form == BlockOp::Form::Map) {
        W.bottomLeftCorner(n, n) = dn.d_mat.conjugate();
        W.bottomRightCorner(n, n) = dn.c_mat.conjugate();
    } else {
        W.bottomLeftCorner(n, n) = -dn.d_mat.conjugate();
        W.bottomRightCorner(n, n) = -dn.c_mat.conjugate();
    }
    return W;
}

void save_blockop(const std::string& path, const BlockOp& op) {
    const BlockOp dn = densify(op);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_blockop: cannot open " + path);
    os << "PLB1\n";
    os << "provenance " << (dn.provenance.empty() ? "unknown" : dn.provenance) << "\n";
    os << "timestamp " << dn.timestamp << "\n";
    os << "form " << (dn.form == BlockOp::Form::Map ? "map" : "generator") << "\n";
    os << "columns " << dn.grid.size() << "\n";
    const std::size_t n = dn.grid.size();
    for (int which = 0; which < 2; ++which) {
        const Eigen::MatrixXcd& m = (which == 0) ? dn.c_mat : dn.d_mat;
        for (std::size_t j = 0; j < n; ++j) {
            Field col(dn.grid, Space::Position);
            for (std::size_t i = 0; i < n; ++i)
                col.values[i] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            write_field(os, col);
        }
    }
}

BlockOp load_blockop(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_blockop: cannot open " + path);
    std::string magic, key, prov, formstr;
    double ts = 0.0;
    std::size_t cols = 0;
    is >> magic;
    if (magic != "PLB1") throw std::runtime_error("load_blockop: bad magic");
    is >> key >> prov >> key >> ts >> key >> formstr >> key >> cols;
    is.get();  // trailing newline before binary payload
    std::vector<Field> columns;
    columns.reserve(2 * cols);
    for (std::size_t j = 0; j < 2 * cols; ++j) columns.push_back(read_field(is));
    const GridSpec g = columns.front().grid;
    if (g.size() != cols) throw std::runtime_error("load_blockop: inconsistent header");
    const auto ni = static_cast<Eigen::Index>(cols);
    Eigen::MatrixXcd c(ni, ni), d(ni, ni);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < cols; ++i) {
            c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = columns[j].values[i];
            d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = columns[cols + j].values[i];
        }
    BlockOp op = BlockOp::dense(g, std::move(c), std::move(d),
                                formstr == "generator" ? BlockOp::Form::Generator
                                                       : BlockOp::Form::Map);
    op.provenance = prov;
    op.timestamp = ts;
    return op;
}

}  // namespace polaron
