#include "stance/num_format.hpp"

#include <charconv>
#include <cstdio>

#include "stance/error.hpp"

namespace stance {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw DataError(context + ": malformed number '" + std::string(s) + "'");
    return v;
}

}  // namespace stance
