#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace stance {

// Canonical class order. Probability vectors and confusion matrices are
// indexed in this order everywhere.
enum class Label : int { Agreed = 0, Disagreed = 1, Unrelated = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<Label, kNumClasses> kAllLabels{Label::Agreed, Label::Disagreed,
                                                           Label::Unrelated};

constexpr std::size_t class_index(Label l) { return static_cast<std::size_t>(l); }

// Case-insensitive parse of "agreed" / "disagreed" / "unrelated".
std::optional<Label> parse_label(std::string_view text);

// Canonical lowercase name.
std::string_view label_name(Label l);

}  // namespace stance
