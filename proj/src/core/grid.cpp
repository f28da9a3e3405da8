#include "core/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace polaron {

namespace {

bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

}  // namespace

GridSpec::GridSpec(int d, int M, double L)
    : dim(d), points_per_axis(M), box_length(L) {
    if (d < 1 || d > 3) throw std::invalid_argument("GridSpec: dim must be 1, 2 or 3");
    if (!is_power_of_two(M)) throw std::invalid_argument("GridSpec: M must be a power of two");
    if (!(L > 0.0)) throw std::invalid_argument("GridSpec: box length must be positive");
    n_total_ = 1;
    for (int i = 0; i < d; ++i) n_total_ *= static_cast<std::size_t>(M);
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < dim; ++i) v *= spacing();
    return v;
}

double GridSpec::coordinate(int j) const {
    const int M = points_per_axis;
    return (j < M / 2 ? j : j - M) * spacing();
}

double GridSpec::momentum(int k) const {
    const int M = points_per_axis;
    return momentum_spacing() * (k < M / 2 ? k : k - M);
}

std::size_t GridSpec::flatten(const int* idx) const {
    std::size_t f = 0;
    for (int a = 0; a < dim; ++a) f = f * points_per_axis + static_cast<std::size_t>(idx[a]);
    return f;
}

void GridSpec::unflatten(std::size_t flat, int* idx) const {
    for (int a = dim - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(flat % points_per_axis);
        flat /= points_per_axis;
    }
}

double GridSpec::position_sq(std::size_t flat) const {
    int idx[3];
    unflatten(flat, idx);
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
        const double x = coordinate(idx[a]);
        s += x * x;
    }
    return s;
}

double GridSpec::momentum_sq(std::size_t flat) const {
    int idx[3];
    unflatten(flat, idx);
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
        const double p = momentum(idx[a]);
        s += p * p;
    }
    return s;
}

void GridSpec::position(std::size_t flat, double* out) const {
    int idx[3];
    unflatten(flat, idx);
    for (int a = 0; a < dim; ++a) out[a] = coordinate(idx[a]);
}

void GridSpec::momentum_vec(std::size_t flat, double* out) const {
    int idx[3];
    unflatten(flat, idx);
    for (int a = 0; a < dim; ++a) out[a] = momentum(idx[a]);
}

namespace {

struct PlanKey {
    int dim;
    int M;
    int sign;
    bool operator<(const PlanKey& o) const {
        if (dim != o.dim) return dim < o.dim;
        if (M != o.M) return M < o.M;
        return sign < o.sign;
    }
};

std::mutex g_plan_mutex;
std::map<PlanKey, fftw_plan> g_plans;

fftw_plan get_plan(const GridSpec& g, int sign) {
    const PlanKey key{g.dim, g.points_per_axis, sign};
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto it = g_plans.find(key);
    if (it != g_plans.end()) return it->second;
    // Plan on scratch storage with FFTW_ESTIMATE so the array is not touched;
    // execution uses fftw_execute_dft on caller arrays (same alignment class).
    std::vector<fftw_complex> scratch(g.size());
    int dims[3] = {g.points_per_axis, g.points_per_axis, g.points_per_axis};
    fftw_plan p = fftw_plan_dft(g.dim, dims, scratch.data(), scratch.data(), sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw std::runtime_error("FFTW plan creation failed");
    g_plans.emplace(key, p);
    return p;
}

void run_dft(const GridSpec& g, CVec& values, int sign) {
    if (values.size() != g.size()) throw std::invalid_argument("dft: size mismatch");
    fftw_plan p = get_plan(g, sign);
    auto* data = reinterpret_cast<fftw_complex*>(values.data());
    fftw_execute_dft(p, data, data);
}

}  // namespace

void dft_forward(const GridSpec& g, CVec& values) { run_dft(g, values, FFTW_FORWARD); }
void dft_backward(const GridSpec& g, CVec& values) { run_dft(g, values, FFTW_BACKWARD); }

}  // namespace polaron
