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
#include <cstdint>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wordmill/dict.hpp"
#include "wordmill/math.hpp"
#include "wordmill/model.hpp"

namespace wordmill {

struct AnalogyQuestion {
    std::string a, b, c, d;
    std::string category;
};

/// Word -> vector table in frequency order (rank 0 first). This is the
/// in-memory form of a .vec file and the input to index construction.
struct VectorTable {
    std::uint32_t dim = 0;
    std::vector<std::string> words;
    std::vector<float> vectors;  // words.size() x dim, row-major

    std::span<const float> row(std::size_t i) const { return {&vectors[i * dim], dim}; }
};

/// Word vectors for every vocabulary word of a model, in rank order.
inline VectorTable export_vectors(const EmbeddingModel& model) {
    VectorTable table;
    table.dim = model.dim();
    table.words.reserve(model.vocab().size());
    table.vectors.reserve(model.vocab().size() * model.dim());
    for (std::size_t r = 0; r < model.vocab().size(); ++r) {
        table.words.push_back(model.vocab().word(static_cast<std::int32_t>(r)));
        const std::vector<float> v = model.word_vector(static_cast<std::int32_t>(r));
        table.vectors.insert(table.vectors.end(), v.begin(), v.end());
    }
    return table;
}

inline std::string ascii_lowercase(std::string_view s) {
    std::string out(s);
    for (char& ch : out) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return out;
}

/// Immutable evaluation index: the k most frequent words with their vectors
/// L2-normalized. Safe for concurrent readers.
class EvalIndex {
public:
    /// Keeps the first min(k, n) rows of the frequency-ordered table. With
    /// `lowercase`, words are ASCII-lowercased and later case-duplicates are
    /// dropped (the most frequent form wins).
    static EvalIndex restrict_vocab(const VectorTable& table, std::uint64_t k,
                                    bool lowercase = false) {
        if (k == 0) throw std::invalid_argument("restrict_vocab: k must be >= 1");
        EvalIndex index;
        index.dim_ = table.dim;
        const std::size_t keep = static_cast<std::size_t>(
            std::min<std::uint64_t>(k, static_cast<std::uint64_t>(table.words.size())));
        index.words_.reserve(keep);
        index.normalized_.reserve(keep * table.dim);
        for (std::size_t i = 0; i < keep; ++i) {
            std::string word = lowercase ? ascii_lowercase(table.words[i]) : table.words[i];
            if (!index.index_.emplace(word, static_cast<std::int32_t>(index.words_.size()))
                     .second) {
                continue;  // case-fold duplicate
            }
            index.words_.push_back(std::move(word));
            const std::span<const float> row = table.row(i);
            const double norm = l2_norm(std::span<const float>(row));
            const float scale = norm > 0.0 ? static_cast<float>(1.0 / norm) : 0.0f;
            for (float x : row) index.normalized_.push_back(x * scale);
        }
        return index;
    }

    std::size_t size() const { return words_.size(); }
    std::uint32_t dim() const { return dim_; }
    const std::string& word(std::int32_t i) const { return words_[static_cast<std::size_t>(i)]; }

    std::optional<std::int32_t> find(std::string_view word) const {
        auto it = index_.find(word);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::span<const float> row(std::int32_t i) const {
        return {&normalized_[static_cast<std::size_t>(i) * dim_], dim_};
    }

private:
    std::uint32_t dim_ = 0;
    std::vector<std::string> words_;
    std::vector<float> normalized_;
    std::unordered_map<std::string, std::int32_t, TransparentStringHash, std::equal_to<>> index_;
};

/// 3CosAdd answer: the word whose vector is closest (cosine) to
/// normalize(x_b - x_a + x_c), never one of a, b, c; cosine ties break to
/// the lower (more frequent) rank. Returns nullopt when any query word is
/// missing from the index (the skip signal) or no candidate remains.
inline std::optional<std::string> analogy_answer(const EvalIndex& index, std::string_view a,
                                                 std::string_view b, std::string_view c) {
    const auto ia = index.find(a), ib = index.find(b), ic = index.find(c);
    if (!ia || !ib || !ic) return std::nullopt;

    const std::uint32_t dim = index.dim();
    std::vector<float> target(dim);
    for (std::uint32_t d = 0; d < dim; ++d) {
        target[d] = index.row(*ib)[d] - index.row(*ia)[d] + index.row(*ic)[d];
    }
    const double norm = l2_norm(std::span<const float>(target));
    const float scale = norm > 0.0 ? static_cast<float>(1.0 / norm) : 0.0f;
    for (float& x : target) x *= scale;

    std::int32_t best = -1;
    float best_score = 0.0f;
    for (std::int32_t w = 0; w < static_cast<std::int32_t>(index.size()); ++w) {
        if (w == *ia || w == *ib || w == *ic) continue;
        const float score = dot(std::span<const float>(target), index.row(w));
        if (best < 0 || score > best_score) {
            best = w;
            best_score = score;
        }
    }
    if (best < 0) return std::nullopt;
    return index.word(best);
}

struct Neighbor {
    std::string word;
    float cosine = 0.0f;
};

/// Brute-force nearest neighbors of a query vector, descending cosine with
/// ties broken by rank. `exclude` removes one index entry (the query word).
inline std::vector<Neighbor> nearest_neighbors(const EvalIndex& index,
                                               std::span<const float> query, std::size_t topk,
                                               std::int32_t exclude = -1) {
    if (topk == 0) throw std::invalid_argument("nearest_neighbors: topk must be >= 1");
    std::vector<float> q(query.begin(), query.end());
    const double norm = l2_norm(std::span<const float>(q));
    const float scale = norm > 0.0 ? static_cast<float>(1.0 / norm) : 0.0f;
    for (float& x : q) x *= scale;

    std::vector<std::pair<float, std::int32_t>> scored;
    scored.reserve(index.size());
    for (std::int32_t w = 0; w < static_cast<std::int32_t>(index.size()); ++w) {
        if (w == exclude) continue;
        scored.emplace_back(dot(std::span<const float>(q), index.row(w)), w);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first > y.first;
        return x.second < y.second;
    });
    if (scored.size() > topk) scored.resize(topk);

    std::vector<Neighbor> out;
    out.reserve(scored.size());
    for (const auto& [score, w] : scored) out.push_back({index.word(w), score});
    return out;
}

/// Neighbors of an in-index word (the word itself excluded). Out-of-index
/// queries must go through the vector overload (e.g. via oov_vector).
inline std::vector<Neighbor> nearest_neighbors(const EvalIndex& index, std::string_view word,
                                               std::size_t topk) {
    const auto idx = index.find(word);
    if (!idx) throw std::out_of_range("nearest_neighbors: word not in index: " + std::string(word));
    return nearest_neighbors(index, index.row(*idx), topk, *idx);
}

struct CategoryResult {
    std::string name;
    std::uint64_t correct = 0;
    std::uint64_t attempted = 0;
    std::uint64_t skipped = 0;
};

struct EvaluationReport {
    std::vector<CategoryResult> categories;
    std::uint64_t correct = 0;
    std::uint64_t attempted = 0;
    std::uint64_t skipped = 0;

    std::uint64_t total() const { return attempted + skipped; }
    double accuracy() const {
        return attempted > 0 ? static_cast<double>(correct) / static_cast<double>(attempted) : 0.0;
    }
    double coverage() const {
        return total() > 0 ? static_cast<double>(attempted) / static_cast<double>(total()) : 0.0;
    }
};

/// Runs every analogy question against the index. A question is attempted
/// only when all four of its words are present (otherwise it is skipped and
/// feeds coverage); it is correct when analogy_answer returns exactly d.
inline EvaluationReport evaluate(const EvalIndex& index,
                                 const std::vector<AnalogyQuestion>& dataset) {
    EvaluationReport report;
    std::unordered_map<std::string, std::size_t> category_slot;
    for (const AnalogyQuestion& q : dataset) {
        auto [it, inserted] = category_slot.try_emplace(q.category, report.categories.size());
        if (inserted) report.categories.push_back({q.category, 0, 0, 0});
        CategoryResult& cat = report.categories[it->second];

        const bool covered = index.find(q.a) && index.find(q.b) && index.find(q.c) &&
                             index.find(q.d);
        if (!covered) {
            ++cat.skipped;
            ++report.skipped;
            continue;
        }
        ++cat.attempted;
        ++report.attempted;
        const auto answer = analogy_answer(index, q.a, q.b, q.c);
        if (answer && *answer == q.d) {
            ++cat.correct;
            ++report.correct;
        }
    }
    return report;
}

/// Google analogy text format: `: category-name` opens a section, then one
/// question per line as four whitespace-separated words.
inline std::vector<AnalogyQuestion> load_analogy_dataset(std::istream& is,
                                                         bool lowercase = false) {
    std::vector<AnalogyQuestion> questions;
    std::string line;
    std::string category = "default";
    std::size_t lineno = 0;
    std::vector<std::string> tokens;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == ':') {
            category = line.substr(1);
            const std::size_t first = category.find_first_not_of(" \t");
            category = first == std::string::npos ? "" : category.substr(first);
            continue;
        }
        tokens.clear();
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) tokens.push_back(tok);
        if (tokens.size() != 4) {
            throw std::runtime_error("analogy dataset: expected 4 words on line " +
                                     std::to_string(lineno));
        }
        AnalogyQuestion q;
        q.a = lowercase ? ascii_lowercase(tokens[0]) : tokens[0];
        q.b = lowercase ? ascii_lowercase(tokens[1]) : tokens[1];
        q.c = lowercase ? ascii_lowercase(tokens[2]) : tokens[2];
        q.d = lowercase ? ascii_lowercase(tokens[3]) : tokens[3];
        q.category = category;
        questions.push_back(std::move(q));
    }
    return questions;
}

/// Aligned per-category table mirroring the analogy-benchmark layout.
inline void print_report(std::ostream& os, const EvaluationReport& report) {
    std::size_t name_width = 8;
    for (const CategoryResult& c : report.categories) {
        name_width = std::max(name_width, c.name.size());
    }
    os << std::left << std::setw(static_cast<int>(name_width + 2)) << "category"
       << std::right << std::setw(10) << "accuracy" << std::setw(12) << "correct"
       << std::setw(12) << "attempted" << std::setw(10) << "coverage" << '\n';
    auto row = [&](const std::string& name, std::uint64_t correct, std::uint64_t attempted,
                   std::uint64_t skipped) {
        const double acc =
            attempted > 0 ? static_cast<double>(correct) / static_cast<double>(attempted) : 0.0;
        const std::uint64_t total = attempted + skipped;
        const double cov =
            total > 0 ? static_cast<double>(attempted) / static_cast<double>(total) : 0.0;
        os << std::left << std::setw(static_cast<int>(name_width + 2)) << name << std::right
           << std::setw(10) << std::fixed << std::setprecision(4) << acc << std::setw(12)
           << correct << std::setw(12) << attempted << std::setw(10) << std::setprecision(4)
           << cov << '\n';
    };
    for (const CategoryResult& c : report.categories) {
        row(c.name, c.correct, c.attempted, c.skipped);
    }
    row("TOTAL", report.correct, report.attempted, report.skipped);
    os.unsetf(std::ios::floatfield);
}

}  // namespace wordmill
