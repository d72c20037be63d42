#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "test_helpers.hpp"
#include "wordmill/langid.hpp"
#include "wordmill/rng.hpp"

using namespace wordmill;
using testutil::synth_line;

namespace {

bool close_rel(double a, double b, double rtol = 1e-4, double atol = 1e-8) {
    return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

std::vector<std::uint32_t> code_lengths(const HuffmanTree& tree) {
    std::vector<std::uint32_t> lengths;
    for (const auto& code : tree.codes) {
        lengths.push_back(static_cast<std::uint32_t>(code.size()));
    }
    return lengths;
}

}  // namespace

TEST_CASE("extract_features enumerates character n-grams") {
    const std::uint64_t big = std::uint64_t(1) << 32;
    CHECK(extract_features("ab", 2, 2, big) == std::vector<std::uint32_t>{fnv1a32("ab")});
    CHECK(extract_features("abc", 2, 3, big) ==
          std::vector<std::uint32_t>{fnv1a32("ab"), fnv1a32("abc"), fnv1a32("bc")});
    CHECK(extract_features("", 2, 4, big).empty());
    CHECK(extract_features("a", 2, 4, big).empty());
    // Multiplicity preserved.
    CHECK(extract_features("aaa", 2, 2, big) ==
          std::vector<std::uint32_t>{fnv1a32("aa"), fnv1a32("aa")});
    CHECK_THROWS_AS(extract_features("abc", 0, 2, 100), std::invalid_argument);
    CHECK_THROWS_AS(extract_features("abc", 3, 2, 100), std::invalid_argument);
}

TEST_CASE("build_huffman code lengths for skewed counts") {
    const HuffmanTree tree = build_huffman({3, 2, 1});
    CHECK(code_lengths(tree) == std::vector<std::uint32_t>{1, 2, 2});
}

TEST_CASE("build_huffman degenerate and symmetric cases") {
    const HuffmanTree single = build_huffman({10});
    CHECK(code_lengths(single) == std::vector<std::uint32_t>{0});

    const HuffmanTree pair = build_huffman({4, 4});
    CHECK(code_lengths(pair) == std::vector<std::uint32_t>{1, 1});

    CHECK_THROWS_AS(build_huffman({}), std::invalid_argument);
}

TEST_CASE("build_huffman ties break deterministically") {
    const HuffmanTree a = build_huffman({2, 2, 2, 2});
    const HuffmanTree b = build_huffman({2, 2, 2, 2});
    CHECK(a.codes == b.codes);
    CHECK(code_lengths(a) == std::vector<std::uint32_t>{2, 2, 2, 2});
}

TEST_CASE("huffman codes are prefix-free and satisfy Kraft equality") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.bounded(20);
        std::vector<std::uint64_t> counts;
        for (std::size_t i = 0; i < n; ++i) counts.push_back(1 + rng.bounded(1000));
        const HuffmanTree tree = build_huffman(counts);

        std::uint32_t max_len = 0;
        for (const auto& code : tree.codes) {
            max_len = std::max(max_len, static_cast<std::uint32_t>(code.size()));
        }
        // Kraft equality, exactly: sum over leaves of 2^(max-len) == 2^max.
        std::uint64_t kraft = 0;
        for (const auto& code : tree.codes) {
            kraft += std::uint64_t(1) << (max_len - code.size());
        }
        CHECK(kraft == std::uint64_t(1) << max_len);

        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const auto& ci = tree.codes[i];
                const auto& cj = tree.codes[j];
                const bool prefix = ci.size() <= cj.size() &&
                                    std::equal(ci.begin(), ci.end(), cj.begin());
                CHECK_FALSE(prefix);
            }
        }
    }
}

TEST_CASE("label probabilities sum to one for any model state") {
    Rng rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.bounded(12);
        std::vector<std::uint64_t> counts;
        for (std::size_t i = 0; i < n; ++i) counts.push_back(1 + rng.bounded(50));
        LangIdConfig cfg;
        cfg.dim = 4;
        cfg.bucket_count = 64;
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < n; ++i) labels.push_back("L" + std::to_string(i));
        LangIdModel model(labels, build_huffman(counts), cfg);
        for (float& x : model.node_matrix()) x = rng.uniform(-3.0f, 3.0f);

        std::vector<float> h(cfg.dim);
        for (float& x : h) x = rng.uniform(-2.0f, 2.0f);
        const std::vector<double> probs = model.label_probabilities(h);
        const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
}

TEST_CASE("hierarchical softmax gradient matches finite differences") {
    Rng rng(321);
    int points = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n_labels = 2 + rng.bounded(6);
        const std::size_t dim = 2 + rng.bounded(7);  // <= 8
        std::vector<std::uint64_t> counts;
        for (std::size_t i = 0; i < n_labels; ++i) counts.push_back(1 + rng.bounded(40));
        const HuffmanTree tree = build_huffman(counts);

        std::vector<double> nodes(tree.internal_count() * dim);
        for (double& x : nodes) x = rng.uniform(-1.5f, 1.5f);
        std::vector<double> h(dim);
        for (double& x : h) x = rng.uniform(-1.5f, 1.5f);
        const auto label = static_cast<std::int32_t>(rng.bounded(
            static_cast<std::uint32_t>(n_labels)));

        std::vector<double> grad_h(dim, 0.0), grad_nodes(nodes.size(), 0.0);
        hs_gradients<double>(h, tree, label, nodes, grad_h, grad_nodes);

        const double eps = 1e-6;
        for (std::size_t d = 0; d < dim; ++d) {
            const double keep = h[d];
            h[d] = keep + eps;
            const double up = hs_loss<double>(h, tree, label, nodes);
            h[d] = keep - eps;
            const double down = hs_loss<double>(h, tree, label, nodes);
            h[d] = keep;
            CHECK(close_rel(grad_h[d], (up - down) / (2 * eps)));
            ++points;
        }
        for (std::size_t idx = 0; idx < nodes.size(); idx += 1 + rng.bounded(3)) {
            const double keep = nodes[idx];
            nodes[idx] = keep + eps;
            const double up = hs_loss<double>(h, tree, label, nodes);
            nodes[idx] = keep - eps;
            const double down = hs_loss<double>(h, tree, label, nodes);
            nodes[idx] = keep;
            CHECK(close_rel(grad_nodes[idx], (up - down) / (2 * eps)));
            ++points;
        }
    }
    CHECK(points >= 100);
}

TEST_CASE("single-label model predicts its label with confidence 1") {
    LangIdConfig cfg;
    cfg.dim = 4;
    cfg.bucket_count = 64;
    const LangIdModel model = train_langid({{"only", "some line of text"}}, cfg);
    const auto pred = model.predict("anything at all");
    REQUIRE(pred.has_value());
    CHECK(pred->label == "only");
    CHECK(pred->confidence == 1.0);
}

TEST_CASE("predict returns nullopt when no features can be extracted") {
    const LangIdModel& model = testutil::two_lang_model();
    CHECK_FALSE(model.predict("").has_value());
    CHECK_FALSE(model.predict("x").has_value());  // shorter than nmin=2
    CHECK(model.predict("xy").has_value());
}

TEST_CASE("best-label probability is at least 1/|labels|") {
    Rng rng(55);
    const LangIdModel& model = testutil::two_lang_model();
    for (int i = 0; i < 50; ++i) {
        const auto pred = model.predict(testutil::synth_line(rng, "abcdefghij", 4));
        REQUIRE(pred.has_value());
        CHECK(pred->confidence >= 0.5);
    }
}

TEST_CASE("training separates a two-language synthetic corpus") {
    Rng rng(77);
    LangIdConfig cfg;
    cfg.dim = 8;
    cfg.bucket_count = 1u << 12;
    cfg.seed = 77;
    const auto train_set =
        testutil::synth_langid_corpus(rng, {{"A", "abcde"}, {"B", "fghij"}}, 1000, 8);
    LangIdTrainStats stats;
    const LangIdModel model = train_langid(train_set, cfg, &stats);

    REQUIRE(stats.epoch_avg_loss.size() == cfg.epochs);
    CHECK(stats.epoch_avg_loss.back() < stats.epoch_avg_loss.front());
    for (double loss : stats.epoch_avg_loss) CHECK(std::isfinite(loss));

    const auto held_out =
        testutil::synth_langid_corpus(rng, {{"A", "abcde"}, {"B", "fghij"}}, 250, 8);
    std::size_t correct = 0;
    for (const auto& [label, line] : held_out) {
        const auto pred = model.predict(line);
        REQUIRE(pred.has_value());
        correct += pred->label == label ? 1 : 0;
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(held_out.size()) >= 0.99);

    const auto pred = model.predict("aaaa aaaa");
    REQUIRE(pred.has_value());
    CHECK(pred->label == "A");
    CHECK(pred->confidence >= 0.99);
}

TEST_CASE("training separates three languages with distinct alphabets") {
    Rng rng(88);
    LangIdConfig cfg;
    cfg.dim = 8;
    cfg.bucket_count = 1u << 12;
    cfg.seed = 88;
    const std::vector<testutil::LangSpec> langs = {
        {"A", "abcde"}, {"B", "fghij"}, {"C", "klmno"}};
    const auto train_set = testutil::synth_langid_corpus(rng, langs, 800, 8);
    const LangIdModel model = train_langid(train_set, cfg);

    const auto held_out = testutil::synth_langid_corpus(rng, langs, 200, 8);
    std::vector<std::size_t> correct(3, 0), total(3, 0);
    for (const auto& [label, line] : held_out) {
        const auto pred = model.predict(line);
        REQUIRE(pred.has_value());
        const std::size_t idx = static_cast<std::size_t>(label[0] - 'A');
        ++total[idx];
        correct[idx] += pred->label == label ? 1 : 0;
    }
    double macro = 0;
    for (int i = 0; i < 3; ++i) {
        macro += static_cast<double>(correct[i]) / static_cast<double>(total[i]);
    }
    CHECK(macro / 3.0 >= 0.95);
}

TEST_CASE("train_langid rejects an empty corpus") {
    LangIdConfig cfg;
    CHECK_THROWS_AS(train_langid({}, cfg), std::invalid_argument);
}

TEST_CASE("predict is deterministic") {
    const LangIdModel& model = testutil::two_lang_model();
    const auto p1 = model.predict("abc abc abc");
    const auto p2 = model.predict("abc abc abc");
    REQUIRE(p1.has_value());
    REQUIRE(p2.has_value());
    CHECK(p1->label == p2->label);
    CHECK(p1->confidence == p2->confidence);
}

TEST_CASE("langid model round trip is bit exact") {
    const LangIdModel& model = testutil::two_lang_model();
    std::ostringstream out;
    save_langid(out, model);
    std::istringstream in(out.str());
    const LangIdModel loaded = load_langid(in);

    CHECK(loaded.labels() == model.labels());
    CHECK(loaded.feature_matrix() == model.feature_matrix());
    CHECK(loaded.node_matrix() == model.node_matrix());
    REQUIRE(loaded.tree().nodes.size() == model.tree().nodes.size());
    for (std::size_t i = 0; i < model.tree().nodes.size(); ++i) {
        CHECK(loaded.tree().nodes[i].count == model.tree().nodes[i].count);
        CHECK(loaded.tree().nodes[i].child0 == model.tree().nodes[i].child0);
        CHECK(loaded.tree().nodes[i].child1 == model.tree().nodes[i].child1);
    }
    CHECK(loaded.tree().codes == model.tree().codes);

    // Same predictions, bit for bit.
    Rng rng(31);
    for (int i = 0; i < 20; ++i) {
        const std::string line = testutil::synth_line(rng, "abcdefghij", 5);
        const auto a = model.predict(line);
        const auto b = loaded.predict(line);
        REQUIRE(a.has_value());
        REQUIRE(b.has_value());
        CHECK(a->label == b->label);
        CHECK(a->confidence == b->confidence);
    }

    // Corrupted streams are rejected.
    std::istringstream bad_magic(std::string("XXXX") + out.str().substr(4));
    CHECK_THROWS_AS(load_langid(bad_magic), FormatError);
    std::istringstream truncated(out.str().substr(0, out.str().size() / 2));
    CHECK_THROWS_AS(load_langid(truncated), FormatError);
}
