#include "stance/label.hpp"

#include <cctype>
#include <string>

namespace stance {

std::optional<Label> parse_label(std::string_view text) {
    std::string lower;
    lower.reserve(text.size());
    for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "agreed") return Label::Agreed;
    if (lower == "disagreed") return Label::Disagreed;
    if (lower == "unrelated") return Label::Unrelated;
    return std::nullopt;
}

std::string_view label_name(Label l) {
    switch (l) {
        case Label::Agreed: return "agreed";
        case Label::Disagreed: return "disagreed";
        case Label::Unrelated: return "unrelated";
    }
    return "unrelated";
}

}  // namespace stance
