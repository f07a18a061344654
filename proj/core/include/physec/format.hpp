#pragma once

#include <string>

namespace physec {

/// Shortest text that reads back bit-exact (up to 17 significant digits).
/// Infinities and NaN are spelled inf, -inf, nan.
std::string format_double(double value);

}  // namespace physec
