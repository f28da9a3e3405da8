// field_io.hpp — binary container for fields and block operators.
//
// Field layout ("PLF1"): magic, int32 d, int32 M, float64 L_box, int32
// space tag (0 position, 1 momentum), then M^d little-endian re/im float64
// pairs in row-major order.

#pragma once

#include <iosfwd>
#include <string>

#include "core/field.hpp"

namespace polaron {

void write_field(std::ostream& os, const Field& f);
Field read_field(std::istream& is);

void save_field(const std::string& path, const Field& f);
Field load_field(const std::string& path);

}  // namespace polaron
