#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "test_helpers.hpp"
#include "wordmill/trainer.hpp"

using namespace wordmill;

namespace {

/// Zipf-distributed tokens drawn from a per-line topic, so co-occurrence
/// carries learnable signal and training loss has somewhere to go.
MemoryCorpus zipf_corpus(Rng& rng, std::size_t lines, std::size_t words_per_line,
                         std::size_t types_per_topic = 25, std::size_t topics = 6) {
    std::vector<double> cumulative;
    double total = 0;
    for (std::size_t r = 0; r < types_per_topic; ++r) {
        total += 1.0 / static_cast<double>(r + 1);
        cumulative.push_back(total);
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < lines; ++i) {
        const std::uint32_t topic = rng.bounded(static_cast<std::uint32_t>(topics));
        std::string line;
        for (std::size_t j = 0; j < words_per_line; ++j) {
            const double u = rng.real01() * total;
            const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
            if (j > 0) line.push_back(' ');
            line += "t" + std::to_string(topic) + "w" +
                    std::to_string(it - cumulative.begin());
        }
        out.push_back(std::move(line));
    }
    return MemoryCorpus(std::move(out));
}

TrainConfig small_config(Arch arch) {
    TrainConfig cfg;
    cfg.arch = arch;
    cfg.dim = 8;
    cfg.window = 3;
    cfg.epochs = 2;
    cfg.negatives = 3;
    cfg.nmin = 2;
    cfg.nmax = 3;
    cfg.bucket_count = 1000;
    cfg.min_count = 1;
    cfg.subsample_t = 0.0;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("variant presets match the ablation ladder") {
    const TrainConfig baseline = variant_preset("baseline");
    CHECK(baseline.arch == Arch::skipgram);
    CHECK(baseline.nmin == 3);
    CHECK(baseline.nmax == 6);
    CHECK(baseline.negatives == 5);
    CHECK(baseline.epochs == 5);

    const TrainConfig ngram55 = variant_preset("ngram55");
    CHECK(ngram55.arch == Arch::skipgram);
    CHECK(ngram55.nmin == 5);
    CHECK(ngram55.nmax == 5);

    const TrainConfig cbow = variant_preset("cbow");
    CHECK(cbow.arch == Arch::cbow_pos);
    CHECK(cbow.nmin == 5);
    CHECK(cbow.negatives == 5);

    const TrainConfig neg10 = variant_preset("cbow_neg10");
    CHECK(neg10.arch == Arch::cbow_pos);
    CHECK(neg10.negatives == 10);
    CHECK(neg10.epochs == 5);

    const TrainConfig ep10 = variant_preset("cbow_neg10_ep10");
    CHECK(ep10.arch == Arch::cbow_pos);
    CHECK(ep10.negatives == 10);
    CHECK(ep10.epochs == 10);

    const TrainConfig crawl = variant_preset("crawl");
    CHECK(crawl.arch == Arch::cbow_pos);
    CHECK(crawl.negatives == 10);
    CHECK(crawl.epochs == 10);
    CHECK(crawl.source_hint == "crawl");

    CHECK_THROWS_AS(variant_preset("bogus"), std::invalid_argument);
}

TEST_CASE("zero epochs returns the initialized model") {
    Rng rng(1);
    const MemoryCorpus corpus = zipf_corpus(rng, 50, 10);
    const Vocabulary vocab = build_vocab_from_corpus(corpus, 1);
    TrainConfig cfg = small_config(Arch::skipgram);
    cfg.epochs = 0;
    const EmbeddingModel trained = train(corpus, vocab, cfg);
    const EmbeddingModel fresh(vocab, cfg);
    CHECK(trained.input() == fresh.input());
    CHECK(trained.output() == fresh.output());
}

TEST_CASE("training rejects an empty vocabulary") {
    const MemoryCorpus corpus(std::vector<std::string>{"a b c"});
    const Vocabulary empty;
    CHECK_THROWS_AS(train(corpus, empty, small_config(Arch::skipgram)),
                    std::invalid_argument);
}

TEST_CASE("alternating pair corpus learns the co-occurrence") {
    // "a b a b ..." on every line, plus separate lines of "c" so c is in
    // vocabulary but never in a's context.
    std::vector<std::string> lines;
    for (int i = 0; i < 50; ++i) {
        lines.push_back("wa wb wa wb wa wb wa wb wa wb");
        lines.push_back("wc wc wc");
    }
    const MemoryCorpus corpus{std::move(lines)};
    const Vocabulary vocab = build_vocab_from_corpus(corpus, 1);
    TrainConfig cfg = small_config(Arch::skipgram);
    cfg.epochs = 3;
    const EmbeddingModel m = train(corpus, vocab, cfg);

    const auto rank_a = vocab.rank("wa");
    const auto rank_b = vocab.rank("wb");
    const auto rank_c = vocab.rank("wc");
    REQUIRE(rank_a);
    REQUIRE(rank_b);
    REQUIRE(rank_c);
    const std::vector<float> h = m.word_vector(*rank_a);
    const float to_b = dot(std::span<const float>(h), m.output_row(*rank_b));
    const float to_c = dot(std::span<const float>(h), m.output_row(*rank_c));
    CHECK(sigmoid(to_b) > sigmoid(to_c));
}

TEST_CASE("running loss decreases across epochs on a Zipf corpus") {
    Rng rng(2);
    const MemoryCorpus corpus = zipf_corpus(rng, 300, 12);
    const Vocabulary vocab = build_vocab_from_corpus(corpus, 1);
    for (const Arch arch : {Arch::skipgram, Arch::cbow_pos}) {
        TrainConfig cfg = small_config(arch);
        cfg.epochs = 5;
        TrainStats stats;
        train(corpus, vocab, cfg, &stats);
        REQUIRE(stats.epoch_avg_loss.size() == 5);
        CAPTURE(static_cast<int>(arch), stats.epoch_avg_loss);
        CHECK(stats.epoch_avg_loss[4] < stats.epoch_avg_loss[0]);
        for (double loss : stats.epoch_avg_loss) CHECK(std::isfinite(loss));
    }
}

TEST_CASE("training is bit-reproducible with one worker and a fixed seed") {
    Rng rng(3);
    const MemoryCorpus corpus = zipf_corpus(rng, 100, 10);
    const Vocabulary vocab = build_vocab_from_corpus(corpus, 1);
    for (const Arch arch : {Arch::skipgram, Arch::cbow_pos}) {
        TrainConfig cfg = small_config(arch);
        cfg.subsample_t = 1e-3;  // exercise the subsampling draws too
        const EmbeddingModel a = train(corpus, vocab, cfg);
        const EmbeddingModel b = train(corpus, vocab, cfg);
        CHECK(a.input() == b.input());
        CHECK(a.output() == b.output());
        if (arch == Arch::cbow_pos) CHECK(a.positions() == b.positions());

        TrainConfig other = cfg;
        other.seed = cfg.seed + 1;
        const EmbeddingModel c = train(corpus, vocab, other);
        CHECK(a.input() != c.input());
    }
}

TEST_CASE("token accounting is exact") {
    Rng rng(4);
    std::vector<std::string> lines;
    std::uint64_t token_count = 0;
    for (int i = 0; i < 80; ++i) {
        // A few singleton words fall below min_count and become OOV.
        std::string line = "x" + std::to_string(i % 7);
        for (int j = 0; j < 9; ++j) {
            line += " y" + std::to_string(rng.bounded(30));
        }
        line += " singleton" + std::to_string(i);
        token_count += 11;
        lines.push_back(std::move(line));
    }
    const MemoryCorpus corpus{std::move(lines)};
    const Vocabulary vocab = build_vocab_from_corpus(corpus, 2);
    CHECK(vocab.total_tokens() == token_count);

    TrainConfig cfg = small_config(Arch::skipgram);
    cfg.subsample_t = 1e-3;
    cfg.min_count = 2;
    cfg.epochs = 3;
    TrainStats stats;
    train(corpus, vocab, cfg, &stats);
    CHECK(stats.tokens_consumed == cfg.epochs * token_count);
    CHECK(stats.tokens_trained + stats.tokens_subsampled + stats.tokens_oov ==
          stats.tokens_consumed);
    CHECK(stats.tokens_oov >= cfg.epochs * 80);  // at least the singletons
}

TEST_CASE("multithreaded training completes with exact accounting") {
    Rng rng(6);
    const MemoryCorpus corpus = zipf_corpus(rng, 200, 10);
    const Vocabulary vocab = build_vocab_from_corpus(corpus, 1);
    TrainConfig cfg = small_config(Arch::cbow_pos);
    cfg.threads = 3;
    TrainStats stats;
    const EmbeddingModel m = train(corpus, vocab, cfg, &stats);
    CHECK(stats.tokens_consumed == cfg.epochs * vocab.total_tokens());
    CHECK(stats.tokens_trained + stats.tokens_subsampled + stats.tokens_oov ==
          stats.tokens_consumed);
    for (float x : m.input()) REQUIRE(std::isfinite(x));
    for (float x : m.output()) REQUIRE(std::isfinite(x));
    for (float x : m.positions()) REQUIRE(std::isfinite(x));
}

TEST_CASE("no NaN or Inf after training on adversarial corpora") {
    // Tiny vocabulary, many epochs, hot learning rate.
    std::vector<std::string> lines(40, "p q p q p q p q");
    const MemoryCorpus corpus{std::move(lines)};
    const Vocabulary vocab = build_vocab_from_corpus(corpus, 1);
    TrainConfig cfg = small_config(Arch::skipgram);
    cfg.epochs = 20;
    cfg.lr0 = 0.5;
    const EmbeddingModel m = train(corpus, vocab, cfg);
    for (float x : m.input()) REQUIRE(std::isfinite(x));
    for (float x : m.output()) REQUIRE(std::isfinite(x));
}

TEST_CASE("single-word vocabulary trains without negatives") {
    std::vector<std::string> lines(10, "solo solo solo");
    const MemoryCorpus corpus{std::move(lines)};
    const Vocabulary vocab = build_vocab_from_corpus(corpus, 1);
    REQUIRE(vocab.size() == 1);
    TrainConfig cfg = small_config(Arch::skipgram);
    const EmbeddingModel m = train(corpus, vocab, cfg);
    for (float x : m.input()) REQUIRE(std::isfinite(x));
}

TEST_CASE("progress reporting emits lr within bounds") {
    Rng rng(8);
    const MemoryCorpus corpus = zipf_corpus(rng, 2000, 12);
    const Vocabulary vocab = build_vocab_from_corpus(corpus, 1);
    TrainConfig cfg = small_config(Arch::skipgram);
    cfg.epochs = 1;
    std::ostringstream progress;
    train(corpus, vocab, cfg, nullptr, &progress);
    std::istringstream lines(progress.str());
    std::string word;
    int seen = 0;
    while (lines >> word) {
        if (word == "lr") {
            double lr = -1;
            lines >> lr;
            CHECK(lr >= 0.0);
            CHECK(lr <= cfg.lr0);
            ++seen;
        }
    }
    CHECK(seen > 0);
}

TEST_CASE("FileCorpus shards partition the lines exactly") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "wordmill_filecorpus_test.txt";
    {
        std::ofstream out(path);
        for (int i = 0; i < 57; ++i) {
            out << "line" << i;
            for (int j = 0; j < i % 5; ++j) out << " pad" << j;
            out << '\n';
        }
    }
    const FileCorpus corpus(path.string());
    for (const std::size_t nshards : {1u, 2u, 3u, 7u, 16u}) {
        std::vector<std::string> collected;
        for (std::size_t s = 0; s < nshards; ++s) {
            corpus.for_each_line(s, nshards,
                                 [&](std::string_view line) { collected.emplace_back(line); });
        }
        CAPTURE(nshards);
        REQUIRE(collected.size() == 57);
        std::set<std::string> firsts;
        for (const std::string& line : collected) {
            firsts.insert(line.substr(0, line.find(' ')));
        }
        CHECK(firsts.size() == 57);
    }
    fs::remove(path);

    CHECK_THROWS_AS(FileCorpus("/nonexistent/wordmill/corpus.txt"), std::runtime_error);
}

TEST_CASE("FileCorpus and MemoryCorpus train identically") {
    namespace fs = std::filesystem;
    Rng rng(10);
    const MemoryCorpus mem = zipf_corpus(rng, 120, 10);
    const fs::path path = fs::temp_directory_path() / "wordmill_train_corpus.txt";
    {
        std::ofstream out(path);
        mem.for_each_line(0, 1, [&](std::string_view line) { out << line << '\n'; });
    }
    const FileCorpus file(path.string());
    const Vocabulary vocab = build_vocab_from_corpus(mem, 1);
    const TrainConfig cfg = small_config(Arch::skipgram);
    const EmbeddingModel a = train(mem, vocab, cfg);
    const EmbeddingModel b = train(file, vocab, cfg);
    CHECK(a.input() == b.input());
    CHECK(a.output() == b.output());
    fs::remove(path);
}
