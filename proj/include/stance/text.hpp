#pragma once

#include <string>
#include <string_view>

namespace stance {

// Sentence normalization: Unicode canonical composition (NFC), then trimming
// and collapsing of each internal whitespace run to a single U+0020. No case
// folding, no punctuation stripping, no full/half-width unification.
//
// Total on arbitrary bytes: invalid UTF-8 is passed through unchanged and acts
// as a normalization boundary.
std::string normalize_sentence(std::string_view raw);

// NFC alone, same invalid-byte policy. Exposed for tests.
std::string to_nfc(std::string_view utf8);

}  // namespace stance
