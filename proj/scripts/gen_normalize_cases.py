#!/usr/bin/env python3
"""Regenerates tests/support/normalize_cases.inc.

Expected values come from Python's unicodedata, an implementation independent
of the one the library links against. The whitespace reference below mirrors
the documented normalize_sentence contract: NFC, then trimming and collapsing
runs of White_Space code points to a single space.
"""

import unicodedata
from pathlib import Path

WHITE_SPACE = (
    set(range(0x09, 0x0E))
    | {0x20, 0x85, 0xA0, 0x1680}
    | set(range(0x2000, 0x200B))
    | {0x2028, 0x2029, 0x202F, 0x205F, 0x3000}
)


def reference_normalize(text: str) -> str:
    nfc = unicodedata.normalize("NFC", text)
    parts: list[str] = []
    current: list[str] = []
    for ch in nfc:
        if ord(ch) in WHITE_SPACE:
            if current:
                parts.append("".join(current))
                current = []
        else:
            current.append(ch)
    if current:
        parts.append("".join(current))
    return " ".join(parts)


NFC_CASES = [
    "é",                  # combining acute composes
    "café",
    "café",                # already composed
    "Å",                   # singleton decomposition (angstrom sign)
    "Ω",                   # ohm sign -> omega
    "क़",                   # composition exclusion stays decomposed
    "क़",             # the exclusion's decomposed form does not compose
    "가",             # Hangul jamo compose to a syllable
    "각",       # LVT syllable
    "각",             # LV syllable + trailing jamo
    "ạ̇",            # combining marks reorder before composing
    "ạ̇",
    "q̣̇",
    "ḍ̇",
    "x֮̀̕b",
    "Å",             # A + ring
    "Å",
    "が",             # hiragana KA + voicing mark
    "中文新闻", # Han text is untouched
    "ཱི",             # Tibetan vowel signs (non-starter decomposition area)
    "abc",
    "",
]

SENTENCE_CASES = [
    "  abc  def ",
    "abc",
    "",
    "   ",
    "\t\r\n",
    "a\t\r\n b",
    "　中文　 新闻　",
    " x  y",
    " café  au　lait ",
    "é",
    "one  two three",
    " lead and trail ",
]


def c_escape(text: str) -> str:
    out = []
    for byte in text.encode("utf-8"):
        ch = chr(byte)
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif 0x20 <= byte < 0x7F:
            out.append(ch)
        else:
            out.append(f"\\{byte:03o}" + '""')  # close/reopen to stop escape greediness
    return '"' + "".join(out) + '"'


def main() -> None:
    lines = ["// Generated by scripts/gen_normalize_cases.py; do not edit by hand.", ""]
    lines.append("inline const std::vector<std::pair<std::string, std::string>> kNfcCases = {")
    for case in NFC_CASES:
        expected = unicodedata.normalize("NFC", case)
        lines.append(f"    {{{c_escape(case)}, {c_escape(expected)}}},")
    lines.append("};")
    lines.append("")
    lines.append("inline const std::vector<std::pair<std::string, std::string>> kSentenceCases = {")
    for case in SENTENCE_CASES:
        lines.append(f"    {{{c_escape(case)}, {c_escape(reference_normalize(case))}}},")
    lines.append("};")
    lines.append("")
    target = Path(__file__).resolve().parent.parent / "tests" / "support" / "normalize_cases.inc"
    target.write_text("\n".join(lines), encoding="utf-8")
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
