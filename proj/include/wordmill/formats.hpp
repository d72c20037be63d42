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
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include "wordmill/dict.hpp"
#include "wordmill/eval.hpp"
#include "wordmill/io.hpp"
#include "wordmill/model.hpp"

namespace wordmill {

/// Text vector format: a "count dim" header line, then one word per line
/// followed by dim space-separated floats printed with 9 significant digits
/// (enough for an exact float32 round trip).
inline void save_vec(std::ostream& os, const VectorTable& table) {
    os << table.words.size() << ' ' << table.dim << '\n';
    char buf[32];
    for (std::size_t i = 0; i < table.words.size(); ++i) {
        const std::string& word = table.words[i];
        if (word.empty() || word.find_first_of(" \t\n\r") != std::string::npos) {
            throw FormatError("vec save: word contains whitespace: '" + word + "'");
        }
        os << word;
        for (float x : table.row(i)) {
            std::snprintf(buf, sizeof(buf), " %.9g", static_cast<double>(x));
            os << buf;
        }
        os << '\n';
    }
    if (!os.good()) throw FormatError("vec save: write failure");
}

inline VectorTable load_vec(std::istream& is) {
    VectorTable table;
    std::string line;
    if (!std::getline(is, line)) throw FormatError("vec load: missing header");
    std::uint64_t count = 0;
    {
        char* end = nullptr;
        count = std::strtoull(line.c_str(), &end, 10);
        if (end == line.c_str()) throw FormatError("vec load: malformed header on line 1");
        char* end2 = nullptr;
        const long dim = std::strtol(end, &end2, 10);
        if (end2 == end || dim <= 0) throw FormatError("vec load: malformed header on line 1");
        while (*end2 == ' ' || *end2 == '\r') ++end2;
        if (*end2 != '\0') throw FormatError("vec load: malformed header on line 1");
        table.dim = static_cast<std::uint32_t>(dim);
    }

    std::unordered_set<std::string> seen;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t space = line.find(' ');
        if (space == std::string::npos || space == 0) {
            throw FormatError("vec load: malformed row on line " + std::to_string(lineno));
        }
        std::string word = line.substr(0, space);
        if (!seen.insert(word).second) {
            throw FormatError("vec load: duplicate word '" + word + "' on line " +
                              std::to_string(lineno));
        }
        const char* p = line.c_str() + space;
        for (std::uint32_t d = 0; d < table.dim; ++d) {
            char* end = nullptr;
            const float v = std::strtof(p, &end);
            if (end == p) {
                throw FormatError("vec load: expected " + std::to_string(table.dim) +
                                  " values on line " + std::to_string(lineno));
            }
            table.vectors.push_back(v);
            p = end;
        }
        while (*p == ' ') ++p;
        if (*p != '\0') {
            throw FormatError("vec load: too many values on line " + std::to_string(lineno));
        }
        table.words.push_back(std::move(word));
    }
    if (table.words.size() != count) {
        throw FormatError("vec load: header promised " + std::to_string(count) +
                          " words but file has " + std::to_string(table.words.size()));
    }
    return table;
}

inline constexpr std::uint32_t kModelMagic = 0x4D454D57u;  // "WMEM"
inline constexpr std::uint32_t kModelVersion = 1;

/// Binary model file: magic + version, every TrainConfig field, the
/// vocabulary, then the matrices as little-endian 32-bit floats. Loading
/// reproduces the model bit-exactly.
inline void save_model(std::ostream& os, const EmbeddingModel& model) {
    BinaryWriter w(os);
    w.u32(kModelMagic);
    w.u32(kModelVersion);

    const TrainConfig& c = model.config();
    w.u8(static_cast<std::uint8_t>(c.arch));
    w.u32(c.dim);
    w.u32(c.window);
    w.u32(c.epochs);
    w.u32(c.negatives);
    w.f64(c.lr0);
    w.u32(c.nmin);
    w.u32(c.nmax);
    w.u64(c.bucket_count);
    w.u64(c.min_count);
    w.f64(c.subsample_t);
    w.u64(c.seed);
    w.u32(c.threads);
    w.u8(c.freeze_positions ? 1 : 0);
    w.str(c.source_hint);

    const Vocabulary& vocab = model.vocab();
    w.u64(vocab.size());
    w.u64(vocab.min_count());
    w.u64(vocab.total_tokens());
    for (const VocabEntry& e : vocab.entries()) {
        w.str(e.word);
        w.u64(e.count);
    }

    w.f32_array(model.input());
    w.f32_array(model.output());
    if (c.arch == Arch::cbow_pos) w.f32_array(model.positions());
    if (!w.ok()) throw FormatError("model save: write failure");
}

inline EmbeddingModel load_model(std::istream& is) {
    BinaryReader r(is);
    if (r.u32() != kModelMagic) r.fail("model load: bad magic");
    if (r.u32() != kModelVersion) r.fail("model load: unsupported version");

    TrainConfig c;
    const std::uint8_t arch = r.u8();
    if (arch > 1) r.fail("model load: unknown architecture byte");
    c.arch = static_cast<Arch>(arch);
    c.dim = r.u32();
    c.window = r.u32();
    c.epochs = r.u32();
    c.negatives = r.u32();
    c.lr0 = r.f64();
    c.nmin = r.u32();
    c.nmax = r.u32();
    c.bucket_count = r.u64();
    c.min_count = r.u64();
    c.subsample_t = r.f64();
    c.seed = r.u64();
    c.threads = r.u32();
    c.freeze_positions = r.u8() != 0;
    c.source_hint = r.str();

    const std::uint64_t vocab_size = r.u64();
    const std::uint64_t vocab_min_count = r.u64();
    const std::uint64_t total_tokens = r.u64();
    std::vector<VocabEntry> entries;
    entries.reserve(vocab_size);
    for (std::uint64_t i = 0; i < vocab_size; ++i) {
        VocabEntry e;
        e.word = r.str();
        e.count = r.u64();
        entries.push_back(std::move(e));
    }
    Vocabulary vocab(std::move(entries), vocab_min_count, total_tokens);

    EmbeddingModel model = EmbeddingModel::allocate(std::move(vocab), std::move(c));
    const TrainConfig& cfg = model.config();
    r.f32_array(model.input(),
                (model.vocab().size() + cfg.bucket_count) * static_cast<std::size_t>(cfg.dim));
    r.f32_array(model.output(), model.vocab().size() * static_cast<std::size_t>(cfg.dim));
    if (cfg.arch == Arch::cbow_pos) {
        r.f32_array(model.positions(), 2 * static_cast<std::size_t>(cfg.window) * cfg.dim);
    }
    if (!r.at_eof()) r.fail("model load: trailing bytes");
    return model;
}

}  // namespace wordmill
