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

#include <bit>
#include <cstdint>
#include <string_view>

#include "wordmill/utf8.hpp"

namespace wordmill {

/// Hash of a line under Java's String.hashCode contract:
/// h = sum of u[i] * 31^(n-1-i) over the UTF-16 code units u[0..n), with
/// 32-bit wrapping arithmetic. Bit-exact across platforms.
inline std::int32_t java_string_hash(std::string_view text) {
    std::uint32_t h = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        char32_t cp = decode_utf8_at(text, pos);
        if (cp < 0x10000) {
            h = h * 31u + static_cast<std::uint32_t>(cp);
        } else {
            cp -= 0x10000;
            h = h * 31u + (0xD800u + static_cast<std::uint32_t>(cp >> 10));
            h = h * 31u + (0xDC00u + static_cast<std::uint32_t>(cp & 0x3FF));
        }
    }
    return std::bit_cast<std::int32_t>(h);
}

inline constexpr std::uint32_t kFnvOffsetBasis = 2166136261u;
inline constexpr std::uint32_t kFnvPrime = 16777619u;

/// FNV-1a over the raw UTF-8 bytes.
inline std::uint32_t fnv1a32(std::string_view bytes) {
    std::uint32_t h = kFnvOffsetBasis;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= kFnvPrime;
    }
    return h;
}

}  // namespace wordmill
