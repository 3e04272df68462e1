#include "stance/text.hpp"

#include <unicode/uchar.h>
#include <unicode/unorm2.h>
#include <unicode/ustring.h>
#include <unicode/utypes.h>

#include <cstdint>
#include <vector>

#include "stance/error.hpp"

namespace stance {

namespace {

// Length of the strict UTF-8 sequence at s[pos], or 0 if invalid. Writes the
// decoded code point to *cp on success.
std::size_t utf8_decode(const unsigned char* s, std::size_t n, std::size_t pos, char32_t* cp) {
    const unsigned char b0 = s[pos];
    if (b0 < 0x80) {
        *cp = b0;
        return 1;
    }
    auto cont = [&](std::size_t i) { return pos + i < n && (s[pos + i] & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0) {
        if (b0 < 0xC2 || !cont(1)) return 0;  // reject overlong
        *cp = (char32_t(b0 & 0x1F) << 6) | (s[pos + 1] & 0x3F);
        return 2;
    }
    if ((b0 & 0xF0) == 0xE0) {
        if (!cont(1) || !cont(2)) return 0;
        char32_t v = (char32_t(b0 & 0x0F) << 12) | (char32_t(s[pos + 1] & 0x3F) << 6) |
                     (s[pos + 2] & 0x3F);
        if (v < 0x800 || (v >= 0xD800 && v <= 0xDFFF)) return 0;
        *cp = v;
        return 3;
    }
    if ((b0 & 0xF8) == 0xF0) {
        if (!cont(1) || !cont(2) || !cont(3)) return 0;
        char32_t v = (char32_t(b0 & 0x07) << 18) | (char32_t(s[pos + 1] & 0x3F) << 12) |
                     (char32_t(s[pos + 2] & 0x3F) << 6) | (s[pos + 3] & 0x3F);
        if (v < 0x10000 || v > 0x10FFFF) return 0;
        *cp = v;
        return 4;
    }
    return 0;
}

const UNormalizer2* nfc_instance() {
    UErrorCode ec = U_ZERO_ERROR;
    const UNormalizer2* nfc = unorm2_getNFCInstance(&ec);
    if (U_FAILURE(ec) || nfc == nullptr)
        throw InternalError("unicode normalizer unavailable");
    return nfc;
}

// NFC over a segment already known to be valid UTF-8.
std::string nfc_segment(const char* data, std::size_t len) {
    if (len == 0) return {};
    UErrorCode ec = U_ZERO_ERROR;

    std::vector<UChar> u16(len + 1);
    int32_t u16_len = 0;
    u_strFromUTF8(u16.data(), static_cast<int32_t>(u16.size()), &u16_len, data,
                  static_cast<int32_t>(len), &ec);
    if (U_FAILURE(ec)) throw InternalError("utf-16 conversion failed on validated input");

    const UNormalizer2* nfc = nfc_instance();
    ec = U_ZERO_ERROR;
    std::vector<UChar> out(u16_len + 16);
    int32_t out_len = unorm2_normalize(nfc, u16.data(), u16_len, out.data(),
                                       static_cast<int32_t>(out.size()), &ec);
    if (ec == U_BUFFER_OVERFLOW_ERROR) {
        ec = U_ZERO_ERROR;
        out.resize(out_len + 1);
        out_len = unorm2_normalize(nfc, u16.data(), u16_len, out.data(),
                                   static_cast<int32_t>(out.size()), &ec);
    }
    if (U_FAILURE(ec)) throw InternalError("unicode normalization failed");

    std::string result(static_cast<std::size_t>(out_len) * 3 + 4, '\0');
    int32_t u8_len = 0;
    ec = U_ZERO_ERROR;
    u_strToUTF8(result.data(), static_cast<int32_t>(result.size()), &u8_len, out.data(), out_len,
                &ec);
    if (ec == U_BUFFER_OVERFLOW_ERROR) {
        ec = U_ZERO_ERROR;
        result.resize(static_cast<std::size_t>(u8_len));
        u_strToUTF8(result.data(), static_cast<int32_t>(result.size()), &u8_len, out.data(),
                    out_len, &ec);
    }
    if (U_FAILURE(ec)) throw InternalError("utf-8 conversion failed");
    result.resize(static_cast<std::size_t>(u8_len));
    return result;
}

}  // namespace

std::string to_nfc(std::string_view utf8) {
    const auto* s = reinterpret_cast<const unsigned char*>(utf8.data());
    const std::size_t n = utf8.size();
    std::string out;
    out.reserve(n);

    std::size_t seg_start = 0;
    std::size_t pos = 0;
    while (pos < n) {
        char32_t cp = 0;
        std::size_t len = utf8_decode(s, n, pos, &cp);
        if (len == 0) {
            out += nfc_segment(utf8.data() + seg_start, pos - seg_start);
            out += utf8[pos];  // invalid byte kept verbatim
            ++pos;
            seg_start = pos;
        } else {
            pos += len;
        }
    }
    out += nfc_segment(utf8.data() + seg_start, pos - seg_start);
    return out;
}

std::string normalize_sentence(std::string_view raw) {
    const std::string nfc = to_nfc(raw);
    const auto* s = reinterpret_cast<const unsigned char*>(nfc.data());
    const std::size_t n = nfc.size();

    std::string out;
    out.reserve(n);
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < n) {
        char32_t cp = 0;
        std::size_t len = utf8_decode(s, n, pos, &cp);
        const bool ws = len != 0 && u_isUWhiteSpace(static_cast<UChar32>(cp));
        if (len == 0) len = 1;  // invalid byte: opaque, never whitespace
        if (ws) {
            pending_space = true;
        } else {
            if (pending_space && !out.empty()) out += ' ';
            pending_space = false;
            out.append(nfc, pos, len);
        }
        pos += len;
    }
    return out;
}

}  // namespace stance
