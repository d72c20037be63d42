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
#include <istream>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wordmill/hash.hpp"
#include "wordmill/io.hpp"
#include "wordmill/math.hpp"
#include "wordmill/rng.hpp"
#include "wordmill/utf8.hpp"

namespace wordmill {

/// All character n-grams of the line with nmin <= n <= nmax, each hashed
/// (FNV-1a 32-bit) modulo `buckets`. Multiplicity is preserved; n-grams run
/// over Unicode scalar values, spaces included. No normalization (no
/// lowercasing, no NFC) is applied before extraction.
inline std::vector<std::uint32_t> extract_features(std::string_view line, std::uint32_t nmin,
                                                   std::uint32_t nmax, std::uint64_t buckets) {
    if (nmin < 1 || nmin > nmax) {
        throw std::invalid_argument("extract_features: need 1 <= nmin <= nmax");
    }
    const std::vector<char32_t> chars = decode_utf8(line);
    std::vector<std::uint32_t> ids;
    std::string gram;
    for (std::size_t start = 0; start < chars.size(); ++start) {
        gram.clear();
        for (std::size_t n = 1; n <= nmax && start + n <= chars.size(); ++n) {
            append_utf8(gram, chars[start + n - 1]);
            if (n >= nmin) {
                ids.push_back(static_cast<std::uint32_t>(fnv1a32(gram) % buckets));
            }
        }
    }
    return ids;
}

/// Binary Huffman tree over the label set. Leaves are nodes 0..L-1 in label
/// order, internal nodes L..2L-2 in creation order with the root last. Codes
/// are prefix-free and minimize the expected code length for the given
/// counts; merges break count ties on the lowest node id so construction is
/// deterministic.
struct HuffmanTree {
    struct Node {
        std::uint64_t count = 0;
        std::int32_t child0 = -1;  // taken on code bit 0
        std::int32_t child1 = -1;  // taken on code bit 1
        bool leaf() const { return child0 < 0; }
    };

    std::vector<Node> nodes;
    std::size_t label_count = 0;
    // Per label, root-to-leaf: ids of the internal nodes crossed and the
    // branch bit taken at each.
    std::vector<std::vector<std::int32_t>> paths;
    std::vector<std::vector<std::uint8_t>> codes;

    std::size_t internal_count() const { return label_count == 0 ? 0 : label_count - 1; }

    /// Index of an internal node's parameter row: internal ids start at
    /// label_count.
    std::size_t param_row(std::int32_t node_id) const {
        return static_cast<std::size_t>(node_id) - label_count;
    }

    /// Recompute paths/codes from the node topology (root = last node).
    void rebuild_codes() {
        paths.assign(label_count, {});
        codes.assign(label_count, {});
        if (label_count <= 1) return;
        struct Frame {
            std::int32_t node;
            std::vector<std::int32_t> path;
            std::vector<std::uint8_t> code;
        };
        std::vector<Frame> stack;
        stack.push_back({static_cast<std::int32_t>(nodes.size()) - 1, {}, {}});
        while (!stack.empty()) {
            Frame f = std::move(stack.back());
            stack.pop_back();
            const Node& n = nodes[static_cast<std::size_t>(f.node)];
            if (n.leaf()) {
                paths[static_cast<std::size_t>(f.node)] = std::move(f.path);
                codes[static_cast<std::size_t>(f.node)] = std::move(f.code);
                continue;
            }
            for (int bit = 0; bit < 2; ++bit) {
                Frame child = f;
                child.node = bit == 0 ? n.child0 : n.child1;
                child.path.push_back(f.node);
                child.code.push_back(static_cast<std::uint8_t>(bit));
                stack.push_back(std::move(child));
            }
        }
    }
};

/// Builds the Huffman tree for `label_counts` (indexed by label id, all
/// counts > 0). A single label yields the degenerate tree with an empty code.
inline HuffmanTree build_huffman(const std::vector<std::uint64_t>& label_counts) {
    if (label_counts.empty()) {
        throw std::invalid_argument("build_huffman: empty label set");
    }
    HuffmanTree tree;
    tree.label_count = label_counts.size();
    tree.nodes.reserve(2 * label_counts.size() - 1);
    for (std::uint64_t c : label_counts) {
        tree.nodes.push_back({c, -1, -1});
    }

    using Item = std::pair<std::uint64_t, std::int32_t>;  // (count, node id)
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (std::size_t i = 0; i < label_counts.size(); ++i) {
        heap.push({label_counts[i], static_cast<std::int32_t>(i)});
    }
    while (heap.size() > 1) {
        Item a = heap.top();
        heap.pop();
        Item b = heap.top();
        heap.pop();
        HuffmanTree::Node merged;
        merged.count = a.first + b.first;
        merged.child0 = a.second;
        merged.child1 = b.second;
        const auto id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.push_back(merged);
        heap.push({merged.count, id});
    }
    tree.rebuild_codes();
    return tree;
}

/// Hierarchical-softmax loss of predicting `label` from hidden vector h:
/// the negative log of the product of sigmoid decisions along the label's
/// Huffman path. node_matrix is the (internal_count x dim) parameter block.
template <class T>
T hs_loss(std::span<const T> h, const HuffmanTree& tree, std::int32_t label,
          std::span<const T> node_matrix) {
    const std::size_t dim = h.size();
    const auto& path = tree.paths[static_cast<std::size_t>(label)];
    const auto& code = tree.codes[static_cast<std::size_t>(label)];
    T loss = 0;
    for (std::size_t j = 0; j < path.size(); ++j) {
        std::span<const T> theta = node_matrix.subspan(tree.param_row(path[j]) * dim, dim);
        const T s = dot(h, theta);
        // -log sigma(s) for bit 1, -log sigma(-s) for bit 0
        loss += code[j] ? softplus(-s) : softplus(s);
    }
    return loss;
}

/// Analytic gradients of hs_loss. grad_h is accumulated; grad_nodes has the
/// shape of node_matrix and receives the per-node contributions.
template <class T>
void hs_gradients(std::span<const T> h, const HuffmanTree& tree, std::int32_t label,
                  std::span<const T> node_matrix, std::span<T> grad_h, std::span<T> grad_nodes) {
    const std::size_t dim = h.size();
    const auto& path = tree.paths[static_cast<std::size_t>(label)];
    const auto& code = tree.codes[static_cast<std::size_t>(label)];
    for (std::size_t j = 0; j < path.size(); ++j) {
        const std::size_t row = tree.param_row(path[j]) * dim;
        std::span<const T> theta = node_matrix.subspan(row, dim);
        const T g = sigmoid(dot(h, theta)) - T(code[j]);
        axpy(grad_h, g, theta);
        axpy(grad_nodes.subspan(row, dim), g, h);
    }
}

struct LangIdConfig {
    std::uint32_t nmin = 2;
    std::uint32_t nmax = 4;
    std::uint64_t bucket_count = 1u << 21;
    std::uint32_t dim = 16;
    std::uint32_t epochs = 5;
    double lr0 = 0.1;
    std::uint64_t seed = 1;
};

struct LangIdPrediction {
    std::int32_t label_id = -1;
    std::string label;
    double confidence = 0.0;
};

struct LangIdTrainStats {
    std::vector<double> epoch_avg_loss;
    std::uint64_t examples_skipped = 0;  // lines with no extractable features
};

/// Linear bag-of-character-ngrams classifier with hierarchical softmax.
class LangIdModel {
public:
    LangIdModel() = default;
    LangIdModel(std::vector<std::string> labels, HuffmanTree tree, LangIdConfig config)
        : labels_(std::move(labels)), tree_(std::move(tree)), config_(config) {
        features_.assign(config_.bucket_count * config_.dim, 0.0f);
        node_params_.assign(tree_.internal_count() * config_.dim, 0.0f);
    }

    const std::vector<std::string>& labels() const { return labels_; }
    const HuffmanTree& tree() const { return tree_; }
    const LangIdConfig& config() const { return config_; }
    std::vector<float>& feature_matrix() { return features_; }
    const std::vector<float>& feature_matrix() const { return features_; }
    std::vector<float>& node_matrix() { return node_params_; }
    const std::vector<float>& node_matrix() const { return node_params_; }

    std::vector<std::uint32_t> line_features(std::string_view line) const {
        return extract_features(line, config_.nmin, config_.nmax, config_.bucket_count);
    }

    /// Mean of the feature rows for the given bucket ids.
    std::vector<float> hidden(const std::vector<std::uint32_t>& ids) const {
        std::vector<float> h(config_.dim, 0.0f);
        for (std::uint32_t id : ids) {
            add(std::span<float>(h), row(id));
        }
        const float inv = 1.0f / static_cast<float>(ids.size());
        for (float& x : h) x *= inv;
        return h;
    }

    /// Probability of every label given hidden vector h; sums to 1 up to
    /// rounding since each internal node splits its mass between children.
    std::vector<double> label_probabilities(std::span<const float> h) const {
        std::vector<double> scores(tree_.internal_count());
        for (std::size_t i = 0; i < scores.size(); ++i) {
            std::span<const float> theta(&node_params_[i * config_.dim], config_.dim);
            scores[i] = static_cast<double>(dot(h, theta));
        }
        std::vector<double> probs(labels_.size());
        for (std::size_t l = 0; l < labels_.size(); ++l) {
            double logp = 0.0;
            const auto& path = tree_.paths[l];
            const auto& code = tree_.codes[l];
            for (std::size_t j = 0; j < path.size(); ++j) {
                const double s = scores[tree_.param_row(path[j])];
                logp += log_sigmoid(code[j] ? s : -s);
            }
            probs[l] = std::exp(logp);
        }
        return probs;
    }

    /// Most probable label for the line, or nullopt when the line has no
    /// extractable features (shorter than nmin characters). Callers treating
    /// lines as drop-on-unclassifiable rely on the nullopt signal.
    std::optional<LangIdPrediction> predict(std::string_view line) const {
        const std::vector<std::uint32_t> ids = line_features(line);
        if (ids.empty()) return std::nullopt;
        const std::vector<float> h = hidden(ids);
        const std::vector<double> probs = label_probabilities(h);
        const auto best = std::max_element(probs.begin(), probs.end());
        LangIdPrediction pred;
        pred.label_id = static_cast<std::int32_t>(best - probs.begin());
        pred.label = labels_[static_cast<std::size_t>(pred.label_id)];
        pred.confidence = *best;
        return pred;
    }

private:
    std::span<const float> row(std::uint32_t id) const {
        return {&features_[static_cast<std::size_t>(id) * config_.dim], config_.dim};
    }

    std::vector<std::string> labels_;
    HuffmanTree tree_;
    LangIdConfig config_;
    std::vector<float> features_;     // bucket_count x dim
    std::vector<float> node_params_;  // internal_count x dim
};

/// SGD over the hierarchical-softmax log-loss. Labels are numbered by first
/// occurrence in the corpus; the learning rate decays linearly to zero over
/// epochs * |corpus| examples. Lines with no extractable features are
/// skipped and counted in the stats.
inline LangIdModel train_langid(const std::vector<std::pair<std::string, std::string>>& corpus,
                                const LangIdConfig& config, LangIdTrainStats* stats = nullptr) {
    if (corpus.empty()) {
        throw std::invalid_argument("train_langid: empty corpus");
    }
    std::vector<std::string> labels;
    std::vector<std::uint64_t> counts;
    std::vector<std::int32_t> example_label(corpus.size());
    {
        std::unordered_map<std::string, std::int32_t> label_ids;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            auto [it, inserted] =
                label_ids.try_emplace(corpus[i].first, static_cast<std::int32_t>(labels.size()));
            if (inserted) {
                labels.push_back(corpus[i].first);
                counts.push_back(0);
            }
            example_label[i] = it->second;
            ++counts[static_cast<std::size_t>(it->second)];
        }
    }

    LangIdModel model(std::move(labels), build_huffman(counts), config);
    const std::uint32_t dim = config.dim;

    // Feature rows start small and random, node parameters at zero
    // (every decision starts at probability 1/2).
    Rng init_rng(config.seed);
    const float bound = 1.0f / static_cast<float>(dim);
    for (float& x : model.feature_matrix()) x = init_rng.uniform(-bound, bound);

    std::vector<std::vector<std::uint32_t>> features(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        features[i] = model.line_features(corpus[i].second);
    }

    if (stats) *stats = {};
    const HuffmanTree& tree = model.tree();
    std::vector<float>& fmat = model.feature_matrix();
    std::vector<float>& nmat = model.node_matrix();
    const double planned = static_cast<double>(config.epochs) * static_cast<double>(corpus.size());
    std::uint64_t processed = 0;

    std::vector<float> h(dim), grad_h(dim);
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::uint64_t epoch_examples = 0;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const float lr = static_cast<float>(
                config.lr0 * std::max(0.0, 1.0 - static_cast<double>(processed) / planned));
            ++processed;
            const std::vector<std::uint32_t>& ids = features[i];
            if (ids.empty()) {
                if (stats && epoch == 0) ++stats->examples_skipped;
                continue;
            }

            std::fill(h.begin(), h.end(), 0.0f);
            for (std::uint32_t id : ids) {
                add(std::span<float>(h),
                    std::span<const float>(&fmat[static_cast<std::size_t>(id) * dim], dim));
            }
            const float inv_n = 1.0f / static_cast<float>(ids.size());
            for (float& x : h) x *= inv_n;

            std::fill(grad_h.begin(), grad_h.end(), 0.0f);
            const auto label = static_cast<std::size_t>(example_label[i]);
            const auto& path = tree.paths[label];
            const auto& code = tree.codes[label];
            double loss = 0.0;
            for (std::size_t j = 0; j < path.size(); ++j) {
                std::span<float> theta(&nmat[tree.param_row(path[j]) * dim], dim);
                const float s = dot(std::span<const float>(h), std::span<const float>(theta));
                const float g = sigmoid(s) - static_cast<float>(code[j]);
                loss += code[j] ? softplus(-static_cast<double>(s))
                                : softplus(static_cast<double>(s));
                axpy(std::span<float>(grad_h), g, std::span<const float>(theta));
                axpy(theta, -lr * g, std::span<const float>(h));
            }
            // d h / d feature row = 1/N per occurrence
            const float row_lr = -lr * inv_n;
            for (std::uint32_t id : ids) {
                axpy(std::span<float>(&fmat[static_cast<std::size_t>(id) * dim], dim), row_lr,
                     std::span<const float>(grad_h));
            }
            epoch_loss += loss;
            ++epoch_examples;
        }
        if (stats) {
            stats->epoch_avg_loss.push_back(
                epoch_examples > 0 ? epoch_loss / static_cast<double>(epoch_examples) : 0.0);
        }
    }
    return model;
}

inline constexpr std::uint32_t kLangIdMagic = 0x494C4D57u;  // "WMLI"
inline constexpr std::uint32_t kLangIdVersion = 1;

inline void save_langid(std::ostream& os, const LangIdModel& model) {
    BinaryWriter w(os);
    w.u32(kLangIdMagic);
    w.u32(kLangIdVersion);
    const LangIdConfig& c = model.config();
    w.u32(c.nmin);
    w.u32(c.nmax);
    w.u64(c.bucket_count);
    w.u32(c.dim);
    w.u32(c.epochs);
    w.f64(c.lr0);
    w.u64(c.seed);
    w.u32(static_cast<std::uint32_t>(model.labels().size()));
    for (const std::string& label : model.labels()) w.str(label);
    const HuffmanTree& tree = model.tree();
    for (std::size_t i = 0; i < tree.label_count; ++i) w.u64(tree.nodes[i].count);
    for (std::size_t i = tree.label_count; i < tree.nodes.size(); ++i) {
        w.u32(static_cast<std::uint32_t>(tree.nodes[i].child0));
        w.u32(static_cast<std::uint32_t>(tree.nodes[i].child1));
    }
    w.f32_array(model.feature_matrix());
    w.f32_array(model.node_matrix());
    if (!w.ok()) throw FormatError("langid save: write failure");
}

inline LangIdModel load_langid(std::istream& is) {
    BinaryReader r(is);
    if (r.u32() != kLangIdMagic) r.fail("langid load: bad magic");
    if (r.u32() != kLangIdVersion) r.fail("langid load: unsupported version");
    LangIdConfig c;
    c.nmin = r.u32();
    c.nmax = r.u32();
    c.bucket_count = r.u64();
    c.dim = r.u32();
    c.epochs = r.u32();
    c.lr0 = r.f64();
    c.seed = r.u64();
    const std::uint32_t nlabels = r.u32();
    if (nlabels == 0) r.fail("langid load: no labels");
    std::vector<std::string> labels(nlabels);
    for (std::string& label : labels) label = r.str();

    HuffmanTree tree;
    tree.label_count = nlabels;
    tree.nodes.resize(2 * static_cast<std::size_t>(nlabels) - 1);
    for (std::size_t i = 0; i < nlabels; ++i) {
        tree.nodes[i] = {r.u64(), -1, -1};
    }
    for (std::size_t i = nlabels; i < tree.nodes.size(); ++i) {
        tree.nodes[i].child0 = static_cast<std::int32_t>(r.u32());
        tree.nodes[i].child1 = static_cast<std::int32_t>(r.u32());
        if (tree.nodes[i].child0 < 0 ||
            tree.nodes[i].child0 >= static_cast<std::int32_t>(i) ||
            tree.nodes[i].child1 < 0 || tree.nodes[i].child1 >= static_cast<std::int32_t>(i)) {
            r.fail("langid load: invalid tree topology");
        }
        tree.nodes[i].count = tree.nodes[static_cast<std::size_t>(tree.nodes[i].child0)].count +
                              tree.nodes[static_cast<std::size_t>(tree.nodes[i].child1)].count;
    }
    tree.rebuild_codes();

    LangIdModel model(std::move(labels), std::move(tree), c);
    r.f32_array(model.feature_matrix(), c.bucket_count * c.dim);
    r.f32_array(model.node_matrix(), (static_cast<std::size_t>(nlabels) - 1) * c.dim);
    if (!r.at_eof()) r.fail("langid load: trailing bytes");
    return model;
}

}  // namespace wordmill
