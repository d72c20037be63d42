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
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "wordmill/hash.hpp"
#include "wordmill/langid.hpp"
#include "wordmill/utf8.hpp"

namespace wordmill {

struct RawLine {
    std::string text;             // one line, no trailing newline
    std::uint64_t source_offset = 0;  // byte position in the input stream
};

struct FilterConfig {
    std::uint64_t min_chars = 100;   // keep requires strictly more characters
    double min_confidence = 0.8;
    std::string target_language;
};

/// Splits on Unicode whitespace and breaks punctuation characters out as
/// standalone tokens. Never emits empty tokens.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = decode_utf8_at(text, pos);
        if (is_unicode_whitespace(cp)) {
            if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
        } else if (is_punctuation(cp)) {
            if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
            std::string punct;
            append_utf8(punct, cp);
            tokens.push_back(std::move(punct));
        } else {
            append_utf8(current, cp);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

/// Streaming first-occurrence dedup over 32-bit line hashes. Two distinct
/// lines that collide hash the same and the later one is dropped; collisions
/// are rare and accepted, matching the hash-dedup contract.
class Deduplicator {
public:
    /// True when the line's hash has not been seen before (line is kept).
    bool accept(std::string_view line) {
        return seen_.insert(java_string_hash(line)).second;
    }

    std::size_t unique_count() const { return seen_.size(); }

private:
    std::unordered_set<std::int32_t> seen_;
};

/// Keep iff the character count strictly exceeds cfg.min_chars, the
/// prediction confidence reaches cfg.min_confidence, and the predicted
/// language matches the target. Characters are Unicode scalar values.
inline bool filter_line(const RawLine& line, std::string_view predicted_language,
                        double confidence, const FilterConfig& cfg) {
    return count_codepoints(line.text) > cfg.min_chars &&
           confidence >= cfg.min_confidence && predicted_language == cfg.target_language;
}

struct PipelineStats {
    std::uint64_t lines_seen = 0;
    std::uint64_t kept = 0;
    std::uint64_t dropped_by_length = 0;
    std::uint64_t dropped_by_language = 0;  // mismatch or unclassifiable
    std::uint64_t dropped_by_confidence = 0;
    std::uint64_t dropped_by_dedup = 0;
    std::uint64_t tokens_emitted = 0;

    std::uint64_t dropped_total() const {
        return dropped_by_length + dropped_by_language + dropped_by_confidence +
               dropped_by_dedup;
    }
};

/// Hard input failure mid-stream. Carries the stats accumulated so far.
class PipelineIoError : public std::runtime_error {
public:
    PipelineIoError(const std::string& what, PipelineStats partial)
        : std::runtime_error(what), partial_stats(partial) {}
    PipelineStats partial_stats;
};

/// Full preprocessing chain: predict language, filter, deduplicate,
/// tokenize. Kept lines are written to `out` as space-separated tokens, one
/// line per input line. Drop accounting attributes each dropped line to the
/// first failing check in the order length, language, confidence, dedup;
/// unclassifiable lines (no language features) count as language drops.
inline PipelineStats run_pipeline(std::istream& in, std::ostream& out, const FilterConfig& cfg,
                                  const LangIdModel& model) {
    PipelineStats stats;
    Deduplicator dedup;
    RawLine line;
    std::uint64_t next_offset = 0;
    std::string text;
    while (std::getline(in, text)) {
        line.source_offset = next_offset;
        next_offset += text.size() + 1;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        line.text = std::move(text);
        text.clear();
        ++stats.lines_seen;

        const auto pred = model.predict(line.text);
        if (count_codepoints(line.text) <= cfg.min_chars) {
            ++stats.dropped_by_length;
            continue;
        }
        if (!pred || pred->label != cfg.target_language) {
            ++stats.dropped_by_language;
            continue;
        }
        if (pred->confidence < cfg.min_confidence) {
            ++stats.dropped_by_confidence;
            continue;
        }
        if (!dedup.accept(line.text)) {
            ++stats.dropped_by_dedup;
            continue;
        }

        const std::vector<std::string> tokens = tokenize(line.text);
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i > 0) out.put(' ');
            out.write(tokens[i].data(), static_cast<std::streamsize>(tokens[i].size()));
        }
        out.put('\n');
        stats.tokens_emitted += tokens.size();
        ++stats.kept;
    }
    if (in.bad()) {
        throw PipelineIoError("pipeline: input stream failure", stats);
    }
    return stats;
}

}  // namespace wordmill
