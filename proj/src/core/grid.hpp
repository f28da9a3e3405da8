// grid.hpp — periodic box grids and the FFT engine shared by all modules.

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace polaron {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;

// Uniform periodic grid on [-L/2, L/2)^d with M points per axis (M a power
// of two). Position nodes carry signed coordinates so x = 0 is a lattice
// point; momentum nodes are p_k = 2*pi*k/L with k in {-M/2, ..., M/2-1}.
struct GridSpec {
    int dim = 1;
    int points_per_axis = 8;
    double box_length = 1.0;

    GridSpec() = default;
    GridSpec(int d, int M, double L);

    std::size_t size() const { return n_total_; }
    double spacing() const { return box_length / points_per_axis; }
    double cell_volume() const;              // h^d
    double momentum_spacing() const { return 2.0 * pi() / box_length; }

    // signed coordinate of axis index j (wraps M/2..M-1 to negative values)
    double coordinate(int j) const;
    double momentum(int k) const;

    // flat index <-> per-axis indices, row-major
    std::size_t flatten(const int* idx) const;
    void unflatten(std::size_t flat, int* idx) const;

    // |x|^2 of the signed position at flat index; |p|^2 likewise
    double position_sq(std::size_t flat) const;
    double momentum_sq(std::size_t flat) const;
    // signed position / momentum vector at flat index (writes dim entries)
    void position(std::size_t flat, double* out) const;
    void momentum_vec(std::size_t flat, double* out) const;

    std::size_t zero_mode_index() const { return 0; }

    bool operator==(const GridSpec& o) const {
        return dim == o.dim && points_per_axis == o.points_per_axis &&
               box_length == o.box_length;
    }
    bool operator!=(const GridSpec& o) const { return !(*this == o); }

    static double pi() { return 3.14159265358979323846; }

  private:
    std::size_t n_total_ = 8;
};

// In-place unnormalized DFT over the grid (FFTW behind a plan cache; plan
// creation is serialized, execution is concurrent-safe).
void dft_forward(const GridSpec& g, CVec& values);
void dft_backward(const GridSpec& g, CVec& values);

}  // namespace polaron
