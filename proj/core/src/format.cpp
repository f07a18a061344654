#include "physec/format.hpp"

#include <array>
#include <charconv>

namespace physec {

std::string format_double(double value) {
    std::array<char, 40> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

}  // namespace physec
