#include "core/field_io.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace polaron {

namespace {

void put_i32(std::ostream& os, std::int32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((static_cast<std::uint32_t>(v) >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::int32_t get_i32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return static_cast<std::int32_t>(v);
}

void put_f64(std::ostream& os, double v) {
    static_assert(sizeof(double) == 8);
    os.write(reinterpret_cast<const char*>(&v), 8);  // little-endian hosts
}

double get_f64(std::istream& is) {
    double v;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

}  // namespace

void write_field(std::ostream& os, const Field& f) {
    os.write("PLF1", 4);
    put_i32(os, f.grid.dim);
    put_i32(os, f.grid.points_per_axis);
    put_f64(os, f.grid.box_length);
    put_i32(os, f.space == Space::Position ? 0 : 1);
    for (const auto& v : f.values) {
        put_f64(os, v.real());
        put_f64(os, v.imag());
    }
}

Field read_field(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "PLF1") throw std::runtime_error("read_field: bad magic");
    const int d = get_i32(is);
    const int M = get_i32(is);
    const double L = get_f64(is);
    const int tag = get_i32(is);
    GridSpec g(d, M, L);
    Field f(g, tag == 0 ? Space::Position : Space::Momentum);
    for (auto& v : f.values) {
        const double re = get_f64(is);
        const double im = get_f64(is);
        v = Complex{re, im};
    }
    if (!is) throw std::runtime_error("read_field: truncated stream");
    return f;
}

void save_field(const std::string& path, const Field& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_field: cannot open " + path);
    write_field(os, f);
}

Field load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_field: cannot open " + path);
    return read_field(is);
}

}  // namespace polaron
