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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "wordmill/dict.hpp"
#include "wordmill/model.hpp"
#include "wordmill/rng.hpp"

namespace wordmill {

/// Splits a pre-tokenized corpus line on blanks/tabs. Training input is one
/// sentence per line with space-separated tokens (the pipeline's output
/// format), so no further tokenization happens here.
inline void split_tokens(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ' ' || line[i] == '\t') {
            if (i > start) out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
}

/// Draws negative words from the unigram distribution raised to 0.75.
/// Samples equal to the forbidden (target) word are rejected and redrawn.
class NegativeSampler {
public:
    explicit NegativeSampler(const Vocabulary& vocab) {
        cumulative_.reserve(vocab.size());
        double total = 0.0;
        for (const VocabEntry& e : vocab.entries()) {
            total += std::pow(static_cast<double>(e.count), 0.75);
            cumulative_.push_back(total);
        }
    }

    /// At least two words are needed before a forbidden word can be avoided.
    bool can_sample() const { return cumulative_.size() >= 2; }

    std::int32_t sample(Rng& rng, std::int32_t forbidden) const {
        while (true) {
            const double u = rng.real01() * cumulative_.back();
            auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
            auto idx = static_cast<std::int32_t>(
                std::min<std::ptrdiff_t>(it - cumulative_.begin(),
                                         static_cast<std::ptrdiff_t>(cumulative_.size()) - 1));
            if (idx != forbidden) return idx;
        }
    }

private:
    std::vector<double> cumulative_;
};

/// Corpus held in memory as one string per sentence. Workers take
/// contiguous line ranges.
class MemoryCorpus {
public:
    MemoryCorpus() = default;
    explicit MemoryCorpus(std::vector<std::string> lines) : lines_(std::move(lines)) {}

    void add_line(std::string line) { lines_.push_back(std::move(line)); }
    std::size_t line_count() const { return lines_.size(); }

    template <class Fn>
    void for_each_line(std::size_t shard, std::size_t nshards, Fn&& fn) const {
        const std::size_t begin = lines_.size() * shard / nshards;
        const std::size_t end = lines_.size() * (shard + 1) / nshards;
        for (std::size_t i = begin; i < end; ++i) fn(std::string_view(lines_[i]));
    }

private:
    std::vector<std::string> lines_;
};

/// Corpus streamed from a file. Workers own disjoint byte ranges; a line
/// belongs to the shard containing its first byte, so every line is
/// processed exactly once per pass.
class FileCorpus {
public:
    explicit FileCorpus(std::string path) : path_(std::move(path)) {
        std::ifstream f(path_, std::ios::binary | std::ios::ate);
        if (!f) throw std::runtime_error("cannot open corpus file: " + path_);
        size_ = static_cast<std::uint64_t>(f.tellg());
    }

    const std::string& path() const { return path_; }

    template <class Fn>
    void for_each_line(std::size_t shard, std::size_t nshards, Fn&& fn) const {
        const std::uint64_t begin = size_ * shard / nshards;
        const std::uint64_t end = size_ * (shard + 1) / nshards;
        if (begin >= end) return;
        std::ifstream f(path_, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open corpus file: " + path_);

        std::uint64_t pos = begin;
        std::string line;
        if (begin > 0) {
            f.seekg(static_cast<std::streamoff>(begin - 1));
            const int prev = f.get();
            if (prev != '\n') {
                // Mid-line start: the line belongs to the previous shard.
                if (!std::getline(f, line)) return;
                pos = begin + line.size() + 1;
            }
        }
        while (pos < end && std::getline(f, line)) {
            const std::uint64_t line_start = pos;
            pos += line.size() + 1;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line_start >= end) break;
            fn(std::string_view(line));
        }
    }

private:
    std::string path_;
    std::uint64_t size_ = 0;
};

/// Streams the corpus once (single shard) and counts every token.
template <class Corpus>
Vocabulary build_vocab_from_corpus(const Corpus& corpus, std::uint64_t min_count) {
    VocabBuilder builder;
    std::vector<std::string_view> tokens;
    corpus.for_each_line(0, 1, [&](std::string_view line) {
        split_tokens(line, tokens);
        for (std::string_view t : tokens) builder.add(t);
    });
    return builder.build(min_count);
}

struct TrainProgress {
    std::uint64_t tokens_processed = 0;  // tokens consumed from the stream
    float current_lr = 0.0f;
    std::uint32_t epoch = 0;
    double running_loss = 0.0;  // exponential moving average of step loss
};

struct TrainStats {
    // Every consumed token lands in exactly one of the next three buckets;
    // consumed = trained + subsampled + oov = epochs * corpus tokens.
    std::uint64_t tokens_consumed = 0;
    std::uint64_t tokens_trained = 0;
    std::uint64_t tokens_subsampled = 0;
    std::uint64_t tokens_oov = 0;
    std::vector<double> epoch_avg_loss;
};

/// Table-5/Table-4 style ablation ladder. Each step adds one change on top
/// of the previous one; `crawl` shares the final knob set and only flags the
/// intended data source.
inline TrainConfig variant_preset(std::string_view name) {
    TrainConfig cfg;  // baseline: skipgram, n-grams 3-6, 5 negatives, 5 epochs
    if (name == "baseline") return cfg;
    cfg.nmin = 5;
    cfg.nmax = 5;
    if (name == "ngram55") return cfg;
    cfg.arch = Arch::cbow_pos;
    if (name == "cbow") return cfg;
    cfg.negatives = 10;
    if (name == "cbow_neg10") return cfg;
    cfg.epochs = 10;
    if (name == "cbow_neg10_ep10") return cfg;
    if (name == "crawl") {
        cfg.source_hint = "crawl";
        return cfg;
    }
    throw std::invalid_argument("unknown preset: " + std::string(name));
}

namespace detail {

// Sentences are cut into chunks of this many tokens; windows never cross a
// chunk or line boundary.
inline constexpr std::size_t kMaxSentenceTokens = 1000;
inline constexpr std::uint64_t kTokenFlushInterval = 1024;
inline constexpr std::uint64_t kProgressInterval = 10000;

struct WorkerResult {
    std::uint64_t consumed = 0, trained = 0, subsampled = 0, oov = 0;
    std::vector<double> epoch_loss_sum;
    std::vector<std::uint64_t> epoch_steps;
};

/// One hogwild worker. All random decisions happen in a fixed order per
/// consumed line: one subsample draw per in-vocabulary token (when t > 0),
/// then per center one window draw, then per training step the negative
/// draws. Reproducible for a single worker with a fixed seed.
template <class Corpus>
void train_worker(EmbeddingModel& model, const Corpus& corpus, const Vocabulary& vocab,
                  const std::vector<std::vector<std::uint64_t>>& rows_by_rank,
                  const std::vector<double>& keep_prob, const NegativeSampler& sampler,
                  std::size_t worker, std::atomic<std::uint64_t>& global_tokens,
                  std::uint64_t planned_tokens, WorkerResult& result, std::ostream* progress) {
    const TrainConfig& cfg = model.config();
    const bool is_cbow = cfg.arch == Arch::cbow_pos;
    Rng rng(cfg.seed + 1 + worker);

    result.epoch_loss_sum.assign(cfg.epochs, 0.0);
    result.epoch_steps.assign(cfg.epochs, 0);

    std::vector<std::string_view> tokens;
    std::vector<std::int32_t> sentence;
    std::vector<std::int32_t> negatives(cfg.negatives);
    std::vector<float> h, grad_h;
    CbowBuffers cbow_buf;
    std::vector<CbowContextRef> context;
    std::uint64_t pending = 0;
    std::uint64_t since_progress = 0;
    double ema_loss = 0.0;
    bool ema_primed = false;

    auto current_lr = [&]() -> float {
        const std::uint64_t done = global_tokens.load(std::memory_order_relaxed) + pending;
        const double remain =
            1.0 - static_cast<double>(done) / static_cast<double>(planned_tokens);
        return static_cast<float>(cfg.lr0 * std::max(0.0, remain));
    };

    const std::uint32_t k_negatives = sampler.can_sample() ? cfg.negatives : 0;

    for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        corpus.for_each_line(worker, cfg.threads, [&](std::string_view line) {
            split_tokens(line, tokens);
            sentence.clear();
            for (std::string_view tok : tokens) {
                ++result.consumed;
                ++pending;
                const auto rank = vocab.rank(tok);
                if (!rank) {
                    ++result.oov;
                    continue;
                }
                if (cfg.subsample_t > 0.0) {
                    const double u = rng.real01();
                    if (u >= keep_prob[static_cast<std::size_t>(*rank)]) {
                        ++result.subsampled;
                        continue;
                    }
                }
                ++result.trained;
                sentence.push_back(*rank);
            }
            if (pending >= kTokenFlushInterval) {
                global_tokens.fetch_add(pending, std::memory_order_relaxed);
                since_progress += pending;
                pending = 0;
            }

            for (std::size_t chunk = 0; chunk < sentence.size(); chunk += kMaxSentenceTokens) {
                const std::size_t chunk_end =
                    std::min(sentence.size(), chunk + kMaxSentenceTokens);
                for (std::size_t i = chunk; i < chunk_end; ++i) {
                    const std::uint32_t b = 1 + rng.bounded(cfg.window);
                    const std::size_t lo = i >= chunk + b ? i - b : chunk;
                    const std::size_t hi = std::min(chunk_end - 1, i + b);
                    const float lr = current_lr();
                    double step_loss = 0.0;
                    std::size_t steps = 0;

                    if (is_cbow) {
                        context.clear();
                        for (std::size_t j = lo; j <= hi; ++j) {
                            if (j == i) continue;
                            context.push_back(
                                {static_cast<int>(j) - static_cast<int>(i),
                                 &rows_by_rank[static_cast<std::size_t>(sentence[j])]});
                        }
                        if (!context.empty()) {
                            negatives.clear();
                            for (std::uint32_t z = 0; z < k_negatives; ++z) {
                                negatives.push_back(sampler.sample(rng, sentence[i]));
                            }
                            step_loss = cbow_step_buffered(
                                model, std::span<const CbowContextRef>(context), sentence[i],
                                std::span<const std::int32_t>(negatives), lr, cbow_buf);
                            steps = 1;
                        }
                    } else {
                        for (std::size_t j = lo; j <= hi; ++j) {
                            if (j == i) continue;
                            negatives.clear();
                            for (std::uint32_t z = 0; z < k_negatives; ++z) {
                                negatives.push_back(sampler.sample(rng, sentence[j]));
                            }
                            step_loss += skipgram_step_buffered(
                                model,
                                std::span<const std::uint64_t>(
                                    rows_by_rank[static_cast<std::size_t>(sentence[i])]),
                                sentence[j], std::span<const std::int32_t>(negatives), lr, h,
                                grad_h);
                            ++steps;
                        }
                    }

                    if (steps > 0) {
                        result.epoch_loss_sum[epoch] += step_loss;
                        result.epoch_steps[epoch] += steps;
                        const double avg = step_loss / static_cast<double>(steps);
                        ema_loss = ema_primed ? 0.999 * ema_loss + 0.001 * avg : avg;
                        ema_primed = true;
                    }
                }
            }

            if (progress && worker == 0 && since_progress >= kProgressInterval) {
                since_progress = 0;
                TrainProgress p;
                p.tokens_processed = global_tokens.load(std::memory_order_relaxed) + pending;
                p.current_lr = current_lr();
                p.epoch = epoch;
                p.running_loss = ema_loss;
                (*progress) << "epoch " << p.epoch << "  tokens " << p.tokens_processed
                            << "  lr " << p.current_lr << "  loss " << p.running_loss << '\n';
            }
        });
    }
    global_tokens.fetch_add(pending, std::memory_order_relaxed);
}

}  // namespace detail

/// Trains an embedding model over the corpus: cfg.epochs passes, linear
/// learning-rate decay to zero over epochs * vocab.total_tokens consumed
/// tokens, per-center window size drawn uniformly from 1..window. Corpus
/// tokens missing from the vocabulary are skipped and counted. With
/// threads=1 and a fixed seed the result is bit-reproducible; with more
/// workers rows are updated without coordination (hogwild) and exact
/// reproducibility is waived.
template <class Corpus>
EmbeddingModel train(const Corpus& corpus, const Vocabulary& vocab, const TrainConfig& cfg,
                     TrainStats* stats = nullptr, std::ostream* progress = nullptr) {
    if (vocab.empty()) throw std::invalid_argument("train: empty vocabulary");
    cfg.validate();

    EmbeddingModel model(vocab, cfg);
    if (cfg.epochs == 0) {
        if (stats) *stats = {};
        return model;
    }

    std::vector<std::vector<std::uint64_t>> rows_by_rank(vocab.size());
    for (std::size_t r = 0; r < vocab.size(); ++r) {
        rows_by_rank[r] = model.subword_rows(static_cast<std::int32_t>(r));
    }
    std::vector<double> keep_prob(vocab.size());
    for (std::size_t r = 0; r < vocab.size(); ++r) {
        keep_prob[r] =
            discard_probability(vocab.count(static_cast<std::int32_t>(r)), vocab.total_tokens(),
                                cfg.subsample_t);
    }
    NegativeSampler sampler(vocab);

    const std::uint64_t planned =
        std::max<std::uint64_t>(1, cfg.epochs * std::max<std::uint64_t>(1, vocab.total_tokens()));
    std::atomic<std::uint64_t> global_tokens{0};
    std::vector<detail::WorkerResult> results(cfg.threads);

    if (cfg.threads == 1) {
        detail::train_worker(model, corpus, vocab, rows_by_rank, keep_prob, sampler, 0,
                             global_tokens, planned, results[0], progress);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(cfg.threads);
        for (std::size_t w = 0; w < cfg.threads; ++w) {
            workers.emplace_back([&, w] {
                detail::train_worker(model, corpus, vocab, rows_by_rank, keep_prob, sampler, w,
                                     global_tokens, planned, results[w], progress);
            });
        }
        for (std::thread& t : workers) t.join();
    }

    if (stats) {
        *stats = {};
        stats->epoch_avg_loss.assign(cfg.epochs, 0.0);
        std::vector<std::uint64_t> steps(cfg.epochs, 0);
        for (const detail::WorkerResult& r : results) {
            stats->tokens_consumed += r.consumed;
            stats->tokens_trained += r.trained;
            stats->tokens_subsampled += r.subsampled;
            stats->tokens_oov += r.oov;
            for (std::uint32_t e = 0; e < cfg.epochs; ++e) {
                stats->epoch_avg_loss[e] += r.epoch_loss_sum[e];
                steps[e] += r.epoch_steps[e];
            }
        }
        for (std::uint32_t e = 0; e < cfg.epochs; ++e) {
            if (steps[e] > 0) stats->epoch_avg_loss[e] /= static_cast<double>(steps[e]);
        }
    }
    return model;
}

}  // namespace wordmill
