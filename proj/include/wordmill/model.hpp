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
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wordmill/dict.hpp"
#include "wordmill/math.hpp"
#include "wordmill/rng.hpp"

namespace wordmill {

enum class Arch : std::uint8_t { skipgram = 0, cbow_pos = 1 };

struct TrainConfig {
    Arch arch = Arch::skipgram;
    std::uint32_t dim = 100;
    std::uint32_t window = 5;       // n: context offsets -n..-1, 1..n
    std::uint32_t epochs = 5;
    std::uint32_t negatives = 5;
    double lr0 = 0.05;
    std::uint32_t nmin = 3;
    std::uint32_t nmax = 6;
    std::uint64_t bucket_count = 2'000'000;
    std::uint64_t min_count = 5;
    double subsample_t = 1e-4;      // 0 disables subsampling
    std::uint64_t seed = 1;
    std::uint32_t threads = 1;
    bool freeze_positions = false;  // diagnostic: keep position vectors fixed
    std::string source_hint;        // preset metadata (e.g. "crawl")

    NgramConfig ngram_config() const { return {nmin, nmax, bucket_count, '<', '>'}; }

    void validate() const {
        if (dim == 0 || window == 0) throw std::invalid_argument("dim and window must be positive");
        if (nmin < 1 || nmin > nmax) throw std::invalid_argument("need 1 <= nmin <= nmax");
        if (bucket_count == 0) throw std::invalid_argument("bucket_count must be positive");
        if (lr0 <= 0.0) throw std::invalid_argument("lr0 must be positive");
        if (threads == 0) throw std::invalid_argument("threads must be positive");
    }
};

class UnrepresentableWordError : public std::runtime_error {
public:
    explicit UnrepresentableWordError(const std::string& word)
        : std::runtime_error("unrepresentable word: no character n-grams in range: " + word) {}
};

/// Sum of the selected matrix rows.
template <class T>
std::vector<T> row_sum(std::span<const T> matrix, std::uint32_t dim,
                       std::span<const std::uint64_t> rows) {
    std::vector<T> v(dim, T(0));
    for (std::uint64_t r : rows) {
        add(std::span<T>(v), matrix.subspan(r * dim, dim));
    }
    return v;
}

/// Subword embedding model: one input row per vocabulary word followed by
/// bucket_count hashed n-gram rows, one output row per vocabulary word, and
/// for the position-weighted CBOW one position vector per context offset
/// (rows 0..n-1 are offsets -n..-1, rows n..2n-1 are offsets 1..n).
class EmbeddingModel {
public:
    EmbeddingModel() = default;

    EmbeddingModel(Vocabulary vocab, TrainConfig config)
        : config_(std::move(config)), vocab_(std::move(vocab)) {
        config_.validate();
        const std::size_t dim = config_.dim;
        input_.assign((vocab_.size() + config_.bucket_count) * dim, 0.0f);
        output_.assign(vocab_.size() * dim, 0.0f);
        Rng rng(config_.seed);
        const float bound = 1.0f / static_cast<float>(dim);
        for (float& x : input_) x = rng.uniform(-bound, bound);
        if (config_.arch == Arch::cbow_pos) {
            // All-ones start: training begins at the plain (unweighted) CBOW.
            positions_.assign(2 * static_cast<std::size_t>(config_.window) * dim, 1.0f);
        }
    }

    /// Allocates matrices at zero without the random initialization pass;
    /// deserialization overwrites every entry.
    static EmbeddingModel allocate(Vocabulary vocab, TrainConfig config) {
        EmbeddingModel m;
        config.validate();
        m.config_ = std::move(config);
        m.vocab_ = std::move(vocab);
        const std::size_t dim = m.config_.dim;
        m.input_.assign((m.vocab_.size() + m.config_.bucket_count) * dim, 0.0f);
        m.output_.assign(m.vocab_.size() * dim, 0.0f);
        if (m.config_.arch == Arch::cbow_pos) {
            m.positions_.assign(2 * static_cast<std::size_t>(m.config_.window) * dim, 0.0f);
        }
        return m;
    }

    const TrainConfig& config() const { return config_; }
    const Vocabulary& vocab() const { return vocab_; }
    std::uint32_t dim() const { return config_.dim; }

    std::vector<float>& input() { return input_; }
    const std::vector<float>& input() const { return input_; }
    std::vector<float>& output() { return output_; }
    const std::vector<float>& output() const { return output_; }
    std::vector<float>& positions() { return positions_; }
    const std::vector<float>& positions() const { return positions_; }

    std::span<float> input_row(std::uint64_t row) {
        return {&input_[row * config_.dim], config_.dim};
    }
    std::span<const float> input_row(std::uint64_t row) const {
        return {&input_[row * config_.dim], config_.dim};
    }
    std::span<float> output_row(std::int32_t rank) {
        return {&output_[static_cast<std::uint64_t>(rank) * config_.dim], config_.dim};
    }
    std::span<const float> output_row(std::int32_t rank) const {
        return {&output_[static_cast<std::uint64_t>(rank) * config_.dim], config_.dim};
    }

    /// Row index in the input matrix for the given position-vector slot.
    std::size_t position_index(int offset) const {
        const int n = static_cast<int>(config_.window);
        return static_cast<std::size_t>(offset < 0 ? offset + n : offset + n - 1);
    }
    std::span<float> position_row(int offset) {
        return {&positions_[position_index(offset) * config_.dim], config_.dim};
    }
    std::span<const float> position_row(int offset) const {
        return {&positions_[position_index(offset) * config_.dim], config_.dim};
    }

    /// Input rows backing an in-vocabulary word: its own row first, then its
    /// n-gram bucket rows in n-gram order.
    std::vector<std::uint64_t> subword_rows(std::int32_t rank) const {
        std::vector<std::uint64_t> rows;
        const std::vector<std::string> grams =
            char_ngrams(vocab_.word(rank), config_.ngram_config());
        rows.reserve(grams.size() + 1);
        rows.push_back(static_cast<std::uint64_t>(rank));
        for (const std::string& g : grams) {
            rows.push_back(vocab_.size() + ngram_bucket(g, config_.bucket_count));
        }
        return rows;
    }

    /// u_word: the word's own input row plus the sum of its n-gram rows.
    std::vector<float> word_vector(std::int32_t rank) const {
        const std::vector<std::uint64_t> rows = subword_rows(rank);
        return row_sum(std::span<const float>(input_), config_.dim,
                       std::span<const std::uint64_t>(rows));
    }

    /// Sum of n-gram bucket rows only, for words outside the vocabulary.
    /// Throws UnrepresentableWordError when no n-gram falls in range.
    std::vector<float> oov_vector(std::string_view word) const {
        const std::vector<std::string> grams = char_ngrams(word, config_.ngram_config());
        if (grams.empty()) throw UnrepresentableWordError(std::string(word));
        std::vector<std::uint64_t> rows;
        rows.reserve(grams.size());
        for (const std::string& g : grams) {
            rows.push_back(vocab_.size() + ngram_bucket(g, config_.bucket_count));
        }
        return row_sum(std::span<const float>(input_), config_.dim,
                       std::span<const std::uint64_t>(rows));
    }

    /// Vector for any word: subword-augmented row sum when in vocabulary,
    /// n-gram-only sum otherwise.
    std::vector<float> vector_for(std::string_view word) const {
        if (auto rank = vocab_.rank(word)) return word_vector(*rank);
        return oov_vector(word);
    }

private:
    TrainConfig config_;
    Vocabulary vocab_;
    std::vector<float> input_;     // (|vocab| + bucket_count) x dim
    std::vector<float> output_;    // |vocab| x dim
    std::vector<float> positions_; // 2*window x dim, cbow_pos only
};

/// Negative-sampling loss: -log sigma(h.v_target) - sum -log sigma(-h.v_neg),
/// evaluated through softplus so it stays finite for all finite inputs.
template <class T>
T ns_loss(std::span<const T> h, std::span<const T> target,
          const std::vector<std::vector<T>>& negatives) {
    T loss = softplus(-dot(h, target));
    for (const std::vector<T>& neg : negatives) {
        loss += softplus(dot(h, std::span<const T>(neg)));
    }
    return loss;
}

template <class T>
struct NsGradients {
    std::vector<T> wrt_h;
    std::vector<T> wrt_target;
    std::vector<std::vector<T>> wrt_negatives;
};

/// Exact gradients of ns_loss:
///   d/dh      = (sigma(h.v_t) - 1) v_t + sum sigma(h.v_n) v_n
///   d/dv_t    = (sigma(h.v_t) - 1) h
///   d/dv_n    = sigma(h.v_n) h
template <class T>
NsGradients<T> ns_gradients(std::span<const T> h, std::span<const T> target,
                            const std::vector<std::vector<T>>& negatives) {
    const std::size_t dim = h.size();
    NsGradients<T> g;
    g.wrt_h.assign(dim, T(0));
    g.wrt_target.assign(dim, T(0));
    const T gt = sigmoid(dot(h, target)) - T(1);
    axpy(std::span<T>(g.wrt_h), gt, target);
    axpy(std::span<T>(g.wrt_target), gt, h);
    for (const std::vector<T>& neg : negatives) {
        std::span<const T> vn(neg);
        const T gn = sigmoid(dot(h, vn));
        axpy(std::span<T>(g.wrt_h), gn, vn);
        g.wrt_negatives.emplace_back(dim, T(0));
        axpy(std::span<T>(g.wrt_negatives.back()), gn, h);
    }
    return g;
}

/// One context slot of the position-weighted CBOW: signed offset in
/// {-n..-1, 1..n} and the (subword-summed) context word vector.
template <class T>
struct ContextSlot {
    int offset;
    std::vector<T> u;
};

inline std::size_t position_slot(int offset, int window) {
    if (offset == 0 || offset < -window || offset > window) {
        throw std::invalid_argument("context offset out of window");
    }
    return static_cast<std::size_t>(offset < 0 ? offset + window : offset + window - 1);
}

/// h = sum over present offsets of c_i (element-wise *) u_i. Offsets absent
/// at sentence boundaries simply do not contribute.
template <class T>
std::vector<T> cbow_context(std::span<const T> positions, int window,
                            const std::vector<ContextSlot<T>>& context) {
    if (context.empty()) throw std::invalid_argument("cbow_context: no context");
    const std::size_t dim = context.front().u.size();
    std::vector<T> h(dim, T(0));
    for (const ContextSlot<T>& slot : context) {
        std::span<const T> c = positions.subspan(position_slot(slot.offset, window) * dim, dim);
        madd(std::span<T>(h), c, std::span<const T>(slot.u));
    }
    return h;
}

template <class T>
struct CbowBackprop {
    std::vector<std::vector<T>> wrt_u;        // per context slot: c_i (*) g
    std::vector<std::vector<T>> wrt_position; // per context slot: u_i (*) g
};

/// Chain rule through cbow_context. Each wrt_u[i] applies unchanged to every
/// input row behind u_i (the word row and all its n-gram bucket rows).
template <class T>
CbowBackprop<T> backprop_cbow(std::span<const T> grad_h, std::span<const T> positions, int window,
                              const std::vector<ContextSlot<T>>& context) {
    const std::size_t dim = grad_h.size();
    CbowBackprop<T> out;
    for (const ContextSlot<T>& slot : context) {
        std::span<const T> c = positions.subspan(position_slot(slot.offset, window) * dim, dim);
        std::vector<T> gu(dim, T(0));
        madd(std::span<T>(gu), c, grad_h);
        std::vector<T> gc(dim, T(0));
        madd(std::span<T>(gc), std::span<const T>(slot.u), grad_h);
        out.wrt_u.push_back(std::move(gu));
        out.wrt_position.push_back(std::move(gc));
    }
    return out;
}

namespace detail {

/// Fused negative-sampling update shared by the skipgram and CBOW steps.
/// Accumulates the gradient w.r.t. h into grad_h (overwritten) using the
/// pre-update output rows, applies -lr steps to the touched output rows, and
/// returns the step loss.
inline double ns_update(EmbeddingModel& m, std::span<const float> h, std::int32_t target,
                        std::span<const std::int32_t> negatives, float lr,
                        std::vector<float>& grad_h) {
    grad_h.assign(h.size(), 0.0f);
    double loss = 0.0;
    {
        std::span<float> vt = m.output_row(target);
        const float s = dot(h, std::span<const float>(vt));
        const float g = sigmoid(s) - 1.0f;
        loss += softplus(-static_cast<double>(s));
        axpy(std::span<float>(grad_h), g, std::span<const float>(vt));
        axpy(vt, -lr * g, h);
    }
    for (std::int32_t neg : negatives) {
        std::span<float> vn = m.output_row(neg);
        const float s = dot(h, std::span<const float>(vn));
        const float g = sigmoid(s);
        loss += softplus(static_cast<double>(s));
        axpy(std::span<float>(grad_h), g, std::span<const float>(vn));
        axpy(vn, -lr * g, h);
    }
    return loss;
}

}  // namespace detail

/// One skipgram SGD step: h is the subword sum of the center word, the
/// context word's output row is the target, and the input-side gradient is
/// applied unchanged to the center's word row and each of its n-gram rows.
/// Buffered variant for the training loop; returns the step loss.
inline double skipgram_step_buffered(EmbeddingModel& m, std::span<const std::uint64_t> center_rows,
                                     std::int32_t target, std::span<const std::int32_t> negatives,
                                     float lr, std::vector<float>& h, std::vector<float>& grad_h) {
    const std::uint32_t dim = m.dim();
    h.assign(dim, 0.0f);
    for (std::uint64_t r : center_rows) {
        add(std::span<float>(h), m.input_row(r));
    }
    const double loss =
        detail::ns_update(m, std::span<const float>(h), target, negatives, lr, grad_h);
    for (std::uint64_t r : center_rows) {
        axpy(m.input_row(r), -lr, std::span<const float>(grad_h));
    }
    return loss;
}

inline double skipgram_step(EmbeddingModel& m, std::int32_t center, std::int32_t target,
                            std::span<const std::int32_t> negatives, float lr) {
    const std::vector<std::uint64_t> rows = m.subword_rows(center);
    std::vector<float> h, grad_h;
    return skipgram_step_buffered(m, std::span<const std::uint64_t>(rows), target, negatives, lr,
                                  h, grad_h);
}

/// Context of one CBOW step: signed offset and the input rows of the word at
/// that offset (word row first, n-gram rows after).
struct CbowContextRef {
    int offset;
    const std::vector<std::uint64_t>* rows;
};

struct CbowBuffers {
    std::vector<float> h, grad_h, tmp;
    std::vector<std::vector<float>> u;  // per-slot subword sums, kept for the c_i gradient
};

/// One position-weighted CBOW SGD step: h = sum of c_offset (*) u_context,
/// negative sampling against the center word's output row, then gradients
/// flow back through every context word's rows and, unless frozen, the
/// position vectors. Context slots must be given in ascending offset order;
/// per-slot operations run in that order so single-worker training is
/// reproducible. Returns the step loss.
inline double cbow_step_buffered(EmbeddingModel& m, std::span<const CbowContextRef> context,
                                 std::int32_t target, std::span<const std::int32_t> negatives,
                                 float lr, CbowBuffers& buf) {
    const std::uint32_t dim = m.dim();
    const bool freeze = m.config().freeze_positions;
    buf.h.assign(dim, 0.0f);
    if (buf.u.size() < context.size()) buf.u.resize(context.size());

    for (std::size_t s = 0; s < context.size(); ++s) {
        std::vector<float>& u = buf.u[s];
        u.assign(dim, 0.0f);
        for (std::uint64_t r : *context[s].rows) {
            add(std::span<float>(u), m.input_row(r));
        }
        madd(std::span<float>(buf.h), m.position_row(context[s].offset),
             std::span<const float>(u));
    }

    const double loss =
        detail::ns_update(m, std::span<const float>(buf.h), target, negatives, lr, buf.grad_h);

    for (std::size_t s = 0; s < context.size(); ++s) {
        std::span<float> c = m.position_row(context[s].offset);
        buf.tmp.assign(dim, 0.0f);
        madd(std::span<float>(buf.tmp), std::span<const float>(c),
             std::span<const float>(buf.grad_h));
        for (std::uint64_t r : *context[s].rows) {
            axpy(m.input_row(r), -lr, std::span<const float>(buf.tmp));
        }
        if (!freeze) {
            for (std::uint32_t d = 0; d < dim; ++d) {
                c[d] += -lr * (buf.u[s][d] * buf.grad_h[d]);
            }
        }
    }
    return loss;
}

}  // namespace wordmill
