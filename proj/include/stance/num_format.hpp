#pragma once

#include <string>
#include <string_view>

namespace stance {

// Decimal with 17 significant digits; parses back to the identical double.
std::string format_double(double v);

// Strict full-string parse. `context` names the field for error messages.
double parse_double(std::string_view s, const std::string& context);

}  // namespace stance
