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

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wordmill/wordmill.hpp"

namespace {

using namespace wordmill;

std::ifstream open_input(const std::string& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw std::runtime_error("cannot open input file: " + path);
    return in;
}

std::ofstream open_output(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return out;
}

LangIdModel load_langid_file(const std::string& path) {
    std::ifstream in = open_input(path, true);
    return load_langid(in);
}

EmbeddingModel load_model_file(const std::string& path) {
    std::ifstream in = open_input(path, true);
    return load_model(in);
}

/// Labeled lines in the `__label__<code> <text>` convention.
std::vector<std::pair<std::string, std::string>> read_labeled_lines(const std::string& path) {
    constexpr std::string_view prefix = "__label__";
    std::ifstream in = open_input(path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind(prefix, 0) != 0) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected a __label__<code> prefix");
        }
        const std::size_t space = line.find(' ', prefix.size());
        if (space == std::string::npos || space == prefix.size()) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": missing label or text");
        }
        out.emplace_back(line.substr(prefix.size(), space - prefix.size()),
                         line.substr(space + 1));
    }
    return out;
}

void print_pipeline_stats(std::ostream& os, const PipelineStats& stats) {
    os << "pipeline stats\n"
       << "  lines_seen             " << stats.lines_seen << '\n'
       << "  kept                   " << stats.kept << '\n'
       << "  dropped_by_length      " << stats.dropped_by_length << '\n'
       << "  dropped_by_language    " << stats.dropped_by_language << '\n'
       << "  dropped_by_confidence  " << stats.dropped_by_confidence << '\n'
       << "  dropped_by_dedup       " << stats.dropped_by_dedup << '\n'
       << "  tokens_emitted         " << stats.tokens_emitted << '\n';
}

struct PipelineArgs {
    std::string lang;
    std::string model_path;
    std::uint64_t min_chars = 100;
    double min_conf = 0.8;
    std::string input = "-";
    std::string output = "-";
};

int run_pipeline_cmd(const PipelineArgs& args) {
    const LangIdModel model = load_langid_file(args.model_path);
    FilterConfig cfg;
    cfg.target_language = args.lang;
    cfg.min_chars = args.min_chars;
    cfg.min_confidence = args.min_conf;

    std::ifstream file_in;
    std::ofstream file_out;
    if (args.input != "-") file_in = open_input(args.input);
    if (args.output != "-") file_out = open_output(args.output);
    std::istream& in = args.input == "-" ? std::cin : file_in;
    std::ostream& out = args.output == "-" ? std::cout : file_out;

    try {
        const PipelineStats stats = run_pipeline(in, out, cfg, model);
        print_pipeline_stats(std::cerr, stats);
    } catch (const PipelineIoError& e) {
        print_pipeline_stats(std::cerr, e.partial_stats);
        throw;
    }
    return 0;
}

struct LangIdTrainArgs {
    std::string input;
    std::string output;
    LangIdConfig config;
};

int run_langid_train(const LangIdTrainArgs& args) {
    const auto corpus = read_labeled_lines(args.input);
    LangIdTrainStats stats;
    const LangIdModel model = train_langid(corpus, args.config, &stats);
    std::ofstream out = open_output(args.output, true);
    save_langid(out, model);
    std::cerr << "trained on " << corpus.size() << " lines, " << model.labels().size()
              << " labels";
    if (!stats.epoch_avg_loss.empty()) {
        std::cerr << ", final avg loss " << stats.epoch_avg_loss.back();
    }
    std::cerr << '\n';
    return 0;
}

int run_langid_predict(const std::string& model_path, const std::string& input) {
    const LangIdModel model = load_langid_file(model_path);
    std::ifstream file_in;
    if (input != "-") file_in = open_input(input);
    std::istream& in = input == "-" ? std::cin : file_in;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto pred = model.predict(line);
        if (pred) {
            std::cout << pred->label << '\t' << pred->confidence << '\n';
        } else {
            std::cout << "und\t0\n";  // unclassifiable: no features
        }
    }
    return 0;
}

int run_langid_eval(const std::string& model_path, const std::string& input) {
    const LangIdModel model = load_langid_file(model_path);
    const auto corpus = read_labeled_lines(input);
    if (corpus.empty()) throw std::runtime_error("empty evaluation file");

    const auto start = std::chrono::steady_clock::now();
    std::uint64_t correct = 0;
    for (const auto& [label, line] : corpus) {
        const auto pred = model.predict(line);
        correct += pred && pred->label == label ? 1 : 0;
    }
    const auto elapsed = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - start).count();
    const double accuracy = static_cast<double>(correct) / static_cast<double>(corpus.size());
    std::cout << "accuracy " << accuracy << " (" << correct << '/' << corpus.size() << ")\n";
    std::cout << "lines/sec "
              << (elapsed > 0 ? static_cast<double>(corpus.size()) / elapsed : 0.0) << '\n';
    return 0;
}

struct TrainArgs {
    std::string input;
    std::string output;
    std::string preset = "baseline";
    TrainConfig cfg;
    bool verbose = false;
};

int run_train(const TrainArgs& args) {
    const FileCorpus corpus(args.input);
    std::cerr << "building vocabulary...\n";
    const Vocabulary vocab = build_vocab_from_corpus(corpus, args.cfg.min_count);
    if (vocab.empty()) {
        throw std::runtime_error("vocabulary is empty: corpus too small for --min-count " +
                                 std::to_string(args.cfg.min_count));
    }
    std::cerr << "vocab " << vocab.size() << " words, " << vocab.total_tokens()
              << " tokens\n";
    TrainStats stats;
    const EmbeddingModel model =
        train(corpus, vocab, args.cfg, &stats, args.verbose ? &std::cerr : nullptr);
    std::ofstream out = open_output(args.output, true);
    save_model(out, model);
    std::cerr << "trained " << stats.tokens_trained << " tokens (" << stats.tokens_subsampled
              << " subsampled, " << stats.tokens_oov << " oov)";
    if (!stats.epoch_avg_loss.empty()) {
        std::cerr << ", final epoch avg loss " << stats.epoch_avg_loss.back();
    }
    std::cerr << '\n';
    return 0;
}

struct EvalAnalogyArgs {
    std::string model_path;
    std::string vectors_path;
    std::string dataset;
    std::uint64_t restrict_k = 200'000;
    bool lowercase = false;
    bool json = false;
};

VectorTable load_table(const std::string& model_path, const std::string& vectors_path) {
    if (!model_path.empty()) return export_vectors(load_model_file(model_path));
    std::ifstream in = open_input(vectors_path);
    return load_vec(in);
}

int run_eval_analogy(const EvalAnalogyArgs& args) {
    const VectorTable table = load_table(args.model_path, args.vectors_path);
    const EvalIndex index = EvalIndex::restrict_vocab(table, args.restrict_k, args.lowercase);
    std::ifstream ds = open_input(args.dataset);
    const auto questions = load_analogy_dataset(ds, args.lowercase);
    const EvaluationReport report = evaluate(index, questions);

    if (args.json) {
        nlohmann::json doc;
        doc["categories"] = nlohmann::json::array();
        for (const CategoryResult& c : report.categories) {
            const std::uint64_t total = c.attempted + c.skipped;
            doc["categories"].push_back(
                {{"name", c.name},
                 {"correct", c.correct},
                 {"attempted", c.attempted},
                 {"skipped", c.skipped},
                 {"accuracy", c.attempted > 0 ? static_cast<double>(c.correct) / c.attempted
                                              : 0.0},
                 {"coverage",
                  total > 0 ? static_cast<double>(c.attempted) / total : 0.0}});
        }
        doc["overall"] = {{"correct", report.correct},
                          {"attempted", report.attempted},
                          {"skipped", report.skipped},
                          {"accuracy", report.accuracy()},
                          {"coverage", report.coverage()}};
        std::cout << doc.dump(2) << '\n';
    } else {
        print_report(std::cout, report);
    }
    return 0;
}

struct NnArgs {
    std::string model_path;
    std::string vectors_path;
    std::string word;
    std::uint64_t topk = 10;
    std::uint64_t restrict_k = 200'000;
};

int run_nn(const NnArgs& args) {
    std::optional<EmbeddingModel> model;
    VectorTable table;
    if (!args.model_path.empty()) {
        model = load_model_file(args.model_path);
        table = export_vectors(*model);
    } else {
        std::ifstream in = open_input(args.vectors_path);
        table = load_vec(in);
    }
    const EvalIndex index = EvalIndex::restrict_vocab(table, args.restrict_k);

    auto query_one = [&](const std::string& word) {
        std::vector<Neighbor> neighbors;
        if (index.find(word)) {
            neighbors = nearest_neighbors(index, word, args.topk);
        } else if (model) {
            // Out of vocabulary: fall back to the subword n-gram sum.
            neighbors = nearest_neighbors(index, model->oov_vector(word), args.topk);
        } else {
            throw std::runtime_error("word not in index and no model for OOV lookup: " + word);
        }
        for (const Neighbor& n : neighbors) {
            std::cout << n.word << ' ' << n.cosine << '\n';
        }
    };

    if (!args.word.empty()) {
        query_one(args.word);
        return 0;
    }
    std::string line;
    while (std::getline(std::cin, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        try {
            query_one(line);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
        }
        std::cout << '\n';
    }
    return 0;
}

int run_export_vec(const std::string& model_path, const std::string& output) {
    const EmbeddingModel model = load_model_file(model_path);
    const VectorTable table = export_vectors(model);
    std::ofstream out = open_output(output);
    save_vec(out, table);
    std::cerr << "wrote " << table.words.size() << " vectors of dim " << table.dim << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);

    CLI::App app{"wordmill: language-filtered corpus pipeline, subword word "
                 "embeddings, and word-analogy evaluation"};
    app.require_subcommand(1);

    PipelineArgs pipeline_args;
    CLI::App* pipeline_cmd = app.add_subcommand(
        "pipeline", "Filter stdin by language, deduplicate, tokenize to stdout");
    pipeline_cmd->add_option("--lang", pipeline_args.lang, "target language code")->required();
    pipeline_cmd->add_option("--langid-model", pipeline_args.model_path,
                             "trained language-identification model")->required();
    pipeline_cmd->add_option("--min-chars", pipeline_args.min_chars,
                             "keep lines with strictly more characters than this")->capture_default_str();
    pipeline_cmd->add_option("--min-conf", pipeline_args.min_conf,
                             "minimum language confidence")->capture_default_str();
    pipeline_cmd->add_option("--input", pipeline_args.input, "input path ('-' for stdin)")->capture_default_str();
    pipeline_cmd->add_option("--output", pipeline_args.output,
                             "output path ('-' for stdout)")->capture_default_str();

    LangIdTrainArgs langid_train_args;
    CLI::App* langid_train_cmd = app.add_subcommand(
        "langid-train", "Train the language detector on __label__ lines");
    langid_train_cmd->add_option("--input", langid_train_args.input, "labeled training file")
        ->required();
    langid_train_cmd->add_option("--output", langid_train_args.output, "model output path")
        ->required();
    langid_train_cmd->add_option("--dim", langid_train_args.config.dim, "embedding dim")->capture_default_str();
    langid_train_cmd->add_option("--lr", langid_train_args.config.lr0, "learning rate")->capture_default_str();
    langid_train_cmd->add_option("--epoch", langid_train_args.config.epochs, "epochs")->capture_default_str();
    langid_train_cmd->add_option("--minn", langid_train_args.config.nmin,
                                 "min char n-gram length")->capture_default_str();
    langid_train_cmd->add_option("--maxn", langid_train_args.config.nmax,
                                 "max char n-gram length")->capture_default_str();
    langid_train_cmd->add_option("--bucket", langid_train_args.config.bucket_count,
                                 "feature hash buckets")->capture_default_str();
    langid_train_cmd->add_option("--seed", langid_train_args.config.seed, "RNG seed")->capture_default_str();

    std::string langid_model_path, langid_input = "-";
    CLI::App* langid_predict_cmd = app.add_subcommand(
        "langid-predict", "Predict `language<TAB>confidence` per input line");
    langid_predict_cmd->add_option("--model", langid_model_path, "language model")->required();
    langid_predict_cmd->add_option("--input", langid_input, "input path ('-' for stdin)")->capture_default_str();

    std::string langid_eval_model, langid_eval_input;
    CLI::App* langid_eval_cmd = app.add_subcommand(
        "langid-eval", "Accuracy and lines/sec on a labeled file");
    langid_eval_cmd->add_option("--model", langid_eval_model, "language model")->required();
    langid_eval_cmd->add_option("--input", langid_eval_input, "labeled file")->required();

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a subword embedding model");
    train_cmd->add_option("--input", train_args.input, "tokenized corpus, one sentence per line")
        ->required();
    train_cmd->add_option("--output", train_args.output, "model output path")->required();
    train_cmd->add_option("--preset", train_args.preset,
                          "baseline|ngram55|cbow|cbow_neg10|cbow_neg10_ep10|crawl")->capture_default_str();
    const auto dim_opt = train_cmd->add_option("--dim", train_args.cfg.dim, "vector dim");
    const auto ws_opt = train_cmd->add_option("--ws", train_args.cfg.window, "window size");
    const auto lr_opt = train_cmd->add_option("--lr", train_args.cfg.lr0, "initial lr");
    const auto neg_opt = train_cmd->add_option("--neg", train_args.cfg.negatives, "negatives");
    const auto epoch_opt = train_cmd->add_option("--epoch", train_args.cfg.epochs, "epochs");
    const auto minn_opt = train_cmd->add_option("--minn", train_args.cfg.nmin, "min n-gram");
    const auto maxn_opt = train_cmd->add_option("--maxn", train_args.cfg.nmax, "max n-gram");
    const auto bucket_opt =
        train_cmd->add_option("--bucket", train_args.cfg.bucket_count, "n-gram buckets");
    const auto min_count_opt =
        train_cmd->add_option("--min-count", train_args.cfg.min_count, "min word count");
    const auto t_opt =
        train_cmd->add_option("--t", train_args.cfg.subsample_t, "subsampling threshold");
    const auto threads_opt =
        train_cmd->add_option("--threads", train_args.cfg.threads, "worker threads");
    const auto seed_opt = train_cmd->add_option("--seed", train_args.cfg.seed, "RNG seed");
    train_cmd->add_flag("--verbose", train_args.verbose, "progress lines on stderr");

    EvalAnalogyArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand(
        "eval-analogy", "Word-analogy accuracy and coverage over a dataset");
    const auto eval_model_opt =
        eval_cmd->add_option("--model", eval_args.model_path, "binary model");
    eval_cmd->add_option("--vectors", eval_args.vectors_path, "text .vec table")
        ->excludes(eval_model_opt);
    eval_cmd->add_option("--dataset", eval_args.dataset, "analogy dataset file")->required();
    eval_cmd->add_option("--restrict", eval_args.restrict_k,
                         "evaluate against the k most frequent words")->capture_default_str();
    eval_cmd->add_flag("--lowercase", eval_args.lowercase,
                       "lowercase both index and dataset");
    eval_cmd->add_flag("--json", eval_args.json, "machine-readable JSON report");

    NnArgs nn_args;
    CLI::App* nn_cmd = app.add_subcommand("nn", "Nearest neighbors of a word");
    const auto nn_model_opt = nn_cmd->add_option("--model", nn_args.model_path, "binary model");
    nn_cmd->add_option("--vectors", nn_args.vectors_path, "text .vec table")
        ->excludes(nn_model_opt);
    nn_cmd->add_option("--word", nn_args.word, "query word (otherwise read stdin)");
    nn_cmd->add_option("--topk", nn_args.topk, "neighbors to print")->capture_default_str();
    nn_cmd->add_option("--restrict", nn_args.restrict_k, "index size limit")->capture_default_str();

    std::string export_model, export_output;
    CLI::App* export_cmd = app.add_subcommand("export-vec", "Write word vectors as text");
    export_cmd->add_option("--model", export_model, "binary model")->required();
    export_cmd->add_option("--output", export_output, "output .vec path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << '\n';
        return 2;
    }

    try {
        if (pipeline_cmd->parsed()) return run_pipeline_cmd(pipeline_args);
        if (langid_train_cmd->parsed()) return run_langid_train(langid_train_args);
        if (langid_predict_cmd->parsed()) {
            return run_langid_predict(langid_model_path, langid_input);
        }
        if (langid_eval_cmd->parsed()) {
            return run_langid_eval(langid_eval_model, langid_eval_input);
        }
        if (train_cmd->parsed()) {
            // Preset first, explicit flags override.
            TrainConfig cfg = variant_preset(train_args.preset);
            if (dim_opt->count()) cfg.dim = train_args.cfg.dim;
            if (ws_opt->count()) cfg.window = train_args.cfg.window;
            if (lr_opt->count()) cfg.lr0 = train_args.cfg.lr0;
            if (neg_opt->count()) cfg.negatives = train_args.cfg.negatives;
            if (epoch_opt->count()) cfg.epochs = train_args.cfg.epochs;
            if (minn_opt->count()) cfg.nmin = train_args.cfg.nmin;
            if (maxn_opt->count()) cfg.nmax = train_args.cfg.nmax;
            if (bucket_opt->count()) cfg.bucket_count = train_args.cfg.bucket_count;
            if (min_count_opt->count()) cfg.min_count = train_args.cfg.min_count;
            if (t_opt->count()) cfg.subsample_t = train_args.cfg.subsample_t;
            if (threads_opt->count()) cfg.threads = train_args.cfg.threads;
            if (seed_opt->count()) cfg.seed = train_args.cfg.seed;
            train_args.cfg = cfg;
            return run_train(train_args);
        }
        if (eval_cmd->parsed()) {
            if (eval_args.model_path.empty() && eval_args.vectors_path.empty()) {
                throw std::runtime_error("eval-analogy needs --model or --vectors");
            }
            return run_eval_analogy(eval_args);
        }
        if (nn_cmd->parsed()) {
            if (nn_args.model_path.empty() && nn_args.vectors_path.empty()) {
                throw std::runtime_error("nn needs --model or --vectors");
            }
            return run_nn(nn_args);
        }
        if (export_cmd->parsed()) return run_export_vec(export_model, export_output);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
