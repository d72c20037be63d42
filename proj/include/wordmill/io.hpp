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
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wordmill {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Little-endian binary writer. All multi-byte values are serialized
/// byte-by-byte so files are identical regardless of host endianness.
class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& os) : os_(os) {}

    void u8(std::uint8_t v) { os_.put(static_cast<char>(v)); }

    void u32(std::uint32_t v) {
        char buf[4];
        for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
        os_.write(buf, 4);
    }

    void u64(std::uint64_t v) {
        char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
        os_.write(buf, 8);
    }

    void i32(std::int32_t v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void bytes(const void* data, std::size_t n) {
        os_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    }

    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    void f32_array(const std::vector<float>& v) {
        if constexpr (std::endian::native == std::endian::little) {
            bytes(v.data(), v.size() * sizeof(float));
        } else {
            for (float x : v) f32(x);
        }
    }

    bool ok() const { return os_.good(); }

private:
    std::ostream& os_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& is) : is_(is) {}

    std::uint8_t u8() {
        int c = is_.get();
        if (c == std::istream::traits_type::eof()) fail("unexpected end of file");
        return static_cast<std::uint8_t>(c);
    }

    std::uint32_t u32() {
        unsigned char buf[4];
        read(buf, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        unsigned char buf[8];
        read(buf, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        return v;
    }

    std::int32_t i32() { return std::bit_cast<std::int32_t>(u32()); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::string str(std::size_t max_len = 1u << 20) {
        std::uint32_t n = u32();
        if (n > max_len) fail("string length field out of range");
        std::string s(n, '\0');
        if (n > 0) read(s.data(), n);
        return s;
    }

    void f32_array(std::vector<float>& out, std::size_t count) {
        out.resize(count);
        if constexpr (std::endian::native == std::endian::little) {
            read(out.data(), count * sizeof(float));
        } else {
            for (std::size_t i = 0; i < count; ++i) out[i] = f32();
        }
    }

    /// True when every byte of the stream has been consumed.
    bool at_eof() {
        return is_.peek() == std::istream::traits_type::eof();
    }

    [[noreturn]] void fail(const std::string& what) { throw FormatError(what); }

private:
    void read(void* dst, std::size_t n) {
        is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n) fail("unexpected end of file");
    }

    std::istream& is_;
};

}  // namespace wordmill
