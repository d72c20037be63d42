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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wordmill/hash.hpp"
#include "wordmill/utf8.hpp"

namespace wordmill {

struct VocabEntry {
    std::string word;
    std::uint64_t count = 0;
};

struct TransparentStringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
    std::size_t operator()(const std::string& s) const {
        return std::hash<std::string_view>{}(s);
    }
};

/// Frequency-ranked word table. Entries are sorted by descending count,
/// ties broken by first occurrence in the corpus; ranks are dense 0..n-1.
/// total_tokens counts every corpus token, including those of words later
/// pruned by min_count.
class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(std::vector<VocabEntry> entries, std::uint64_t min_count,
               std::uint64_t total_tokens)
        : entries_(std::move(entries)), min_count_(min_count), total_tokens_(total_tokens) {
        index_.reserve(entries_.size());
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            index_.emplace(entries_[i].word, static_cast<std::int32_t>(i));
        }
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::uint64_t min_count() const { return min_count_; }
    std::uint64_t total_tokens() const { return total_tokens_; }
    const std::vector<VocabEntry>& entries() const { return entries_; }

    const std::string& word(std::int32_t rank) const {
        return entries_[static_cast<std::size_t>(rank)].word;
    }
    std::uint64_t count(std::int32_t rank) const {
        return entries_[static_cast<std::size_t>(rank)].count;
    }

    /// Rank of the word, or nullopt when out of vocabulary.
    std::optional<std::int32_t> rank(std::string_view w) const {
        auto it = index_.find(w);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::vector<VocabEntry> entries_;
    std::unordered_map<std::string, std::int32_t, TransparentStringHash, std::equal_to<>> index_;
    std::uint64_t min_count_ = 5;
    std::uint64_t total_tokens_ = 0;
};

/// Streaming word counter. Feed every corpus token through add(), then
/// build() prunes words below min_count and ranks the survivors by
/// descending count, first occurrence breaking ties.
class VocabBuilder {
public:
    void add(std::string_view token) {
        auto it = counts_.find(token);
        if (it == counts_.end()) {
            counts_.emplace(std::string(token), Slot{1, total_});
        } else {
            ++it->second.count;
        }
        ++total_;
    }

    Vocabulary build(std::uint64_t min_count) const {
        struct Ranked {
            const std::string* word;
            std::uint64_t count;
            std::uint64_t first_seen;
        };
        std::vector<Ranked> ranked;
        ranked.reserve(counts_.size());
        for (const auto& [word, slot] : counts_) {
            if (slot.count >= min_count) {
                ranked.push_back({&word, slot.count, slot.first_seen});
            }
        }
        std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
            if (a.count != b.count) return a.count > b.count;
            return a.first_seen < b.first_seen;
        });
        std::vector<VocabEntry> entries;
        entries.reserve(ranked.size());
        for (const Ranked& r : ranked) {
            entries.push_back({*r.word, r.count});
        }
        return Vocabulary(std::move(entries), min_count, total_);
    }

private:
    struct Slot {
        std::uint64_t count = 0;
        std::uint64_t first_seen = 0;
    };
    std::unordered_map<std::string, Slot, TransparentStringHash, std::equal_to<>> counts_;
    std::uint64_t total_ = 0;
};

/// Counts every token of `tokens`, prunes words below min_count, and ranks
/// the survivors. An empty corpus yields an empty vocabulary.
template <class TokenRange>
Vocabulary build_vocab(const TokenRange& tokens, std::uint64_t min_count) {
    VocabBuilder builder;
    for (const auto& token : tokens) builder.add(token);
    return builder.build(min_count);
}

struct NgramConfig {
    std::uint32_t nmin = 3;
    std::uint32_t nmax = 6;
    std::uint64_t bucket_count = 2'000'000;
    char bow = '<';
    char eow = '>';
};

/// Character n-grams of the padded word '<' + word + '>', lengths in
/// [nmin, nmax], in position-major order (all lengths at one start position
/// before moving right). The full padded word is never emitted even when its
/// length falls in range: the whole word is represented by its own vocabulary
/// row, not by a hashed bucket. Lengths count Unicode scalar values.
inline std::vector<std::string> char_ngrams(std::string_view word, const NgramConfig& cfg) {
    if (word.empty()) {
        throw std::invalid_argument("char_ngrams: empty word");
    }
    if (word.find(cfg.bow) != std::string_view::npos ||
        word.find(cfg.eow) != std::string_view::npos) {
        throw std::invalid_argument("char_ngrams: word contains a boundary marker character");
    }
    std::vector<char32_t> padded;
    padded.push_back(static_cast<char32_t>(cfg.bow));
    {
        std::size_t pos = 0;
        while (pos < word.size()) padded.push_back(decode_utf8_at(word, pos));
    }
    padded.push_back(static_cast<char32_t>(cfg.eow));

    const std::size_t len = padded.size();
    std::vector<std::string> grams;
    for (std::size_t start = 0; start < len; ++start) {
        for (std::size_t n = cfg.nmin; n <= cfg.nmax && start + n <= len; ++n) {
            if (start == 0 && n == len) continue;  // whole padded word
            std::string gram;
            for (std::size_t i = 0; i < n; ++i) append_utf8(gram, padded[start + i]);
            grams.push_back(std::move(gram));
        }
    }
    return grams;
}

/// Stable bucket id for an n-gram: FNV-1a 32-bit over its UTF-8 bytes,
/// reduced modulo bucket_count.
inline std::uint64_t ngram_bucket(std::string_view ngram, std::uint64_t bucket_count) {
    if (bucket_count == 0) {
        throw std::invalid_argument("ngram_bucket: bucket_count must be positive");
    }
    return fnv1a32(ngram) % bucket_count;
}

/// Keep-probability for frequent-word subsampling:
/// p_keep = min(1, sqrt(t/f) + t/f) with f = count/total. t = 0 disables
/// subsampling (every token kept).
inline double discard_probability(std::uint64_t count, std::uint64_t total_tokens, double t) {
    if (t <= 0.0) return 1.0;
    const double f = static_cast<double>(count) / static_cast<double>(total_tokens);
    const double ratio = t / f;
    return std::min(1.0, std::sqrt(ratio) + ratio);
}

/// One `word<TAB>count` line per entry, rank order.
inline void save_vocab(std::ostream& os, const Vocabulary& vocab) {
    for (const VocabEntry& e : vocab.entries()) {
        os << e.word << '\t' << e.count << '\n';
    }
}

/// Reads a vocabulary dump back. Counts in the file must be non-increasing;
/// ranks are assigned by line order. total_tokens is reconstructed as the
/// sum of the stored counts (pruned tokens are not recoverable from a dump).
inline Vocabulary load_vocab(std::istream& is, std::uint64_t min_count) {
    std::vector<VocabEntry> entries;
    std::uint64_t total = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw std::runtime_error("vocab load: missing tab on line " + std::to_string(lineno));
        }
        VocabEntry e;
        e.word = line.substr(0, tab);
        try {
            e.count = std::stoull(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw std::runtime_error("vocab load: bad count on line " + std::to_string(lineno));
        }
        if (!entries.empty() && e.count > entries.back().count) {
            throw std::runtime_error("vocab load: counts not sorted on line " +
                                     std::to_string(lineno));
        }
        total += e.count;
        entries.push_back(std::move(e));
    }
    return Vocabulary(std::move(entries), min_count, total);
}

}  // namespace wordmill
