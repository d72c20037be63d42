/*
 * Copyright 2026 The Wordmill Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace wordmill {

/// Decode one UTF-8 sequence starting at `pos`. On success returns the code
/// point and advances `pos` past the sequence. Invalid bytes (truncated
/// sequences, overlong forms, surrogates, values above U+10FFFF) consume a
/// single byte and yield U+FFFD, so decoding always makes progress.
inline char32_t decode_utf8_at(std::string_view text, std::size_t& pos) {
    constexpr char32_t replacement = 0xFFFD;
    const auto* bytes = reinterpret_cast<const unsigned char*>(text.data());
    const unsigned char lead = bytes[pos];

    if (lead < 0x80) {
        ++pos;
        return lead;
    }

    int len = 0;
    char32_t cp = 0;
    if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        ++pos;
        return replacement;
    }

    if (pos + static_cast<std::size_t>(len) > text.size()) {
        ++pos;
        return replacement;
    }
    for (int i = 1; i < len; ++i) {
        const unsigned char cont = bytes[pos + static_cast<std::size_t>(i)];
        if ((cont & 0xC0) != 0x80) {
            ++pos;
            return replacement;
        }
        cp = (cp << 6) | (cont & 0x3F);
    }

    // Reject overlong encodings, surrogate range and out-of-range values.
    static constexpr char32_t min_for_len[5] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++pos;
        return replacement;
    }
    pos += static_cast<std::size_t>(len);
    return cp;
}

inline std::vector<char32_t> decode_utf8(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        out.push_back(decode_utf8_at(text, pos));
    }
    return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
        append_utf8(out, cp);
    }
    return out;
}

/// Number of Unicode scalar values in the text (each invalid byte counts as
/// one replacement character).
inline std::size_t count_codepoints(std::string_view text) {
    std::size_t n = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        decode_utf8_at(text, pos);
        ++n;
    }
    return n;
}

/// UTF-16 code units of the text, with surrogate pairs for astral planes.
inline std::vector<std::uint16_t> utf16_units(std::string_view text) {
    std::vector<std::uint16_t> units;
    units.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        char32_t cp = decode_utf8_at(text, pos);
        if (cp < 0x10000) {
            units.push_back(static_cast<std::uint16_t>(cp));
        } else {
            cp -= 0x10000;
            units.push_back(static_cast<std::uint16_t>(0xD800 + (cp >> 10)));
            units.push_back(static_cast<std::uint16_t>(0xDC00 + (cp & 0x3FF)));
        }
    }
    return units;
}

inline bool is_unicode_whitespace(char32_t cp) {
    switch (cp) {
        case 0x0009: case 0x000A: case 0x000B: case 0x000C: case 0x000D:
        case 0x0020: case 0x0085: case 0x00A0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

/// Punctuation table for the rule-based tokenizer. Covers ASCII and Latin-1
/// punctuation, general punctuation, CJK symbols, fullwidth forms, and the
/// common marks of the Arabic, Devanagari, Greek, Hebrew and Armenian
/// scripts. Not a full Unicode category-P table.
inline bool is_punctuation(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
               (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
    }
    if (cp >= 0xA1 && cp <= 0xBF) return true;            // Latin-1 punctuation/signs
    if (cp == 0xD7 || cp == 0xF7) return true;
    if (cp == 0x037E || cp == 0x0387) return true;        // Greek question mark, ano teleia
    if (cp >= 0x055A && cp <= 0x055F) return true;        // Armenian
    if (cp == 0x0589 || cp == 0x058A) return true;
    if (cp == 0x05BE || cp == 0x05C0 || cp == 0x05C3 || cp == 0x05F3 || cp == 0x05F4) return true;
    if (cp == 0x060C || cp == 0x061B || cp == 0x061F || cp == 0x066A ||
        cp == 0x066B || cp == 0x066C || cp == 0x06D4) return true;
    if (cp == 0x0964 || cp == 0x0965 || cp == 0x0970) return true;  // Devanagari danda
    if (cp >= 0x2010 && cp <= 0x2027) return true;        // dashes, quotes, daggers
    if (cp >= 0x2030 && cp <= 0x205E) return true;
    if (cp >= 0x3001 && cp <= 0x303F) return true;        // CJK symbols and punctuation
    if (cp >= 0xFE50 && cp <= 0xFE6F) return true;        // small form variants
    if (cp >= 0xFF01 && cp <= 0xFF0F) return true;        // fullwidth forms
    if (cp >= 0xFF1A && cp <= 0xFF20) return true;
    if (cp >= 0xFF3B && cp <= 0xFF40) return true;
    if (cp >= 0xFF5B && cp <= 0xFF65) return true;
    return false;
}

}  // namespace wordmill
