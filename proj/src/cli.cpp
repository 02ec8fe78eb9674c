#include "transgram/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "transgram/corpus.hpp"
#include "transgram/eval.hpp"
#include "transgram/io.hpp"
#include "transgram/trainer.hpp"

namespace transgram::cli {

namespace fs = std::filesystem;

fs::path context_path(const fs::path& model) { return embedding_file_path(model, std::nullopt, true); }

fs::path config_path(const fs::path& model) {
    std::string stem = model.string();
    if (is_gzip_path(model)) stem.resize(stem.size() - 3);
    return fs::path(stem + ".config");
}

namespace {

LanguageId parse_language(const std::string& flag, const std::string& value) {
    try {
        return LanguageId(value);
    } catch (const std::invalid_argument& e) {
        throw UsageError(flag + ": " + e.what());
    }
}

TaggedWord parse_word(const std::string& flag, const std::string& value) {
    try {
        return parse_tagged_word(value);
    } catch (const std::invalid_argument& e) {
        throw UsageError(flag + ": " + e.what());
    }
}

std::vector<TaggedWord> parse_words(const std::string& flag, const std::vector<std::string>& values) {
    std::vector<TaggedWord> out;
    for (const auto& v : values) out.push_back(parse_word(flag, v));
    return out;
}

struct TrainFlags {
    std::string pivot;
    std::vector<std::vector<std::string>> monos;
    std::vector<std::vector<std::string>> bitexts;
    std::string config_file;
    std::string output;
    std::string vocab_dir;
    bool quiet = false;
    bool no_lowercase = false;
};

void add_config_flags(CLI::App& cmd, TrainingConfig& cfg) {
    cmd.add_option("--dim", cfg.dim, "Embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--window", cfg.window, "Skip-gram window radius")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--negatives", cfg.negatives, "Negative samples per positive pair")->capture_default_str();
    cmd.add_option("--lr", cfg.lr_start, "Initial learning rate")->capture_default_str();
    cmd.add_option("--lr-min", cfg.lr_min, "Learning-rate floor")->capture_default_str();
    cmd.add_option("--sample", cfg.subsample_t, "Subsampling threshold t")->capture_default_str();
    cmd.add_option("--alpha", cfg.alpha, "Negative-sampling exponent")->capture_default_str();
    cmd.add_option("--epochs", cfg.epochs, "Passes over the corpora")->capture_default_str();
    cmd.add_option("--min-count", cfg.min_count, "Drop words rarer than this")->capture_default_str();
    cmd.add_option("--threads", cfg.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    cmd.add_option("--max-sentence-len", cfg.max_sentence_len, "Token cap per sentence")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

TrainCommand finish_train(CLI::App& cmd, TrainFlags& flags, TrainingConfig cfg) {
    TrainCommand out;
    out.pivot = parse_language("--pivot", flags.pivot);
    if (flags.no_lowercase) cfg.lowercase = false;
    if (!flags.config_file.empty()) {
        std::map<std::string, std::string> values;
        try {
            values = read_key_value_file(flags.config_file);
        } catch (const std::exception& e) {
            throw UsageError(std::string("--config: ") + e.what());
        }
        for (const auto& [key, value] : values) {
            if (key == "lowercase" && flags.no_lowercase) continue;
            const std::string flag = "--" + key;
            bool given = false;
            try {
                given = cmd.count(flag) > 0;
            } catch (const CLI::OptionNotFound&) {
            }
            if (given) continue;
            try {
                cfg.set(key, value);
            } catch (const ConfigError& e) {
                throw UsageError(std::string("--config ") + flags.config_file + ": " + e.what());
            }
        }
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw UsageError(std::string("--") + e.what());
    }
    for (const auto& m : flags.monos) out.monos.push_back({parse_language("--mono", m.at(0)), m.at(1)});
    for (const auto& b : flags.bitexts) {
        out.bitexts.push_back({parse_language("--bitext", b.at(0)), b.at(1), b.at(2)});
        if (out.bitexts.back().language == out.pivot) throw UsageError("--bitext: language must differ from --pivot");
    }
    if (out.bitexts.empty() && out.monos.empty()) throw UsageError("train: give at least one --mono or --bitext");
    out.config = cfg;
    out.output = flags.output;
    if (!flags.vocab_dir.empty()) out.vocab_dir = flags.vocab_dir;
    out.quiet = flags.quiet;
    return out;
}

}  // namespace

Command parse_args(const std::vector<std::string>& args) {
    CLI::App app{"Joint cross-lingual word embeddings through a pivot language", "transgram"};
    app.require_subcommand(1);
    app.fallthrough(false);

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a shared embedding space");
    TrainFlags train_flags;
    TrainingConfig train_cfg;
    train_cmd->add_option("--pivot", train_flags.pivot, "Pivot language code")->required();
    train_cmd->add_option("--mono", train_flags.monos, "Monolingual corpus")->expected(2)->type_name("LANG FILE");
    train_cmd->add_option("--bitext", train_flags.bitexts, "Bitext with the pivot")
        ->expected(3)
        ->type_name("LANG PIVOT_FILE LANG_FILE");
    train_cmd->add_option("--config", train_flags.config_file, "key=value file; command-line flags win");
    train_cmd->add_option("-o,--output", train_flags.output, "Model path (prefixed target vectors)")->required();
    train_cmd->add_option("--vocab-dir", train_flags.vocab_dir, "Write <lang>.vocab dumps here");
    train_cmd->add_flag("--no-lowercase", train_flags.no_lowercase, "Keep token case");
    train_cmd->add_flag("-q,--quiet", train_flags.quiet, "No progress lines");
    add_config_flags(*train_cmd, train_cfg);

    // query
    auto* query_cmd = app.add_subcommand("query", "Nearest neighbors and vector arithmetic");
    std::string query_model;
    std::string query_word;
    std::vector<std::string> query_plus;
    std::vector<std::string> query_minus;
    std::vector<std::string> query_targets;
    std::vector<std::string> query_exclude;
    std::size_t query_k = 10;
    query_cmd->add_option("-m,--model", query_model, "Model path")->required();
    query_cmd->add_option("--word", query_word, "Query word as lang:word");
    query_cmd->add_option("--plus", query_plus, "Added term lang:word (repeatable)");
    query_cmd->add_option("--minus", query_minus, "Subtracted term lang:word (repeatable)");
    query_cmd->add_option("--target", query_targets, "Target language (repeatable; default all)");
    query_cmd->add_option("--exclude", query_exclude, "Word to leave out, lang:word (repeatable)");
    query_cmd->add_option("-k,--top", query_k, "Neighbors to list")->check(CLI::PositiveNumber)->capture_default_str();

    // translate-eval
    auto* translate_cmd = app.add_subcommand("translate-eval", "Word-translation precision P@1 and P@5");
    std::string tr_model;
    std::string tr_test;
    std::string tr_source;
    std::string tr_target;
    translate_cmd->add_option("-m,--model", tr_model, "Model path")->required();
    translate_cmd->add_option("--test", tr_test, "TSV source<TAB>target")->required();
    translate_cmd->add_option("--source", tr_source, "Source language")->required();
    translate_cmd->add_option("--target", tr_target, "Target language")->required();

    // classify-eval
    auto* classify_cmd = app.add_subcommand("classify-eval", "Cross-lingual document classification");
    std::string cl_model;
    std::string cl_train;
    std::string cl_train_lang;
    std::string cl_test;
    std::string cl_test_lang;
    ClassifyEvalCommand classify;
    classify_cmd->add_option("-m,--model", cl_model, "Model path")->required();
    classify_cmd->add_option("--train", cl_train, "TSV label<TAB>tokens")->required();
    classify_cmd->add_option("--train-lang", cl_train_lang, "Training documents' language")->required();
    classify_cmd->add_option("--test", cl_test, "TSV label<TAB>tokens")->required();
    classify_cmd->add_option("--test-lang", cl_test_lang, "Test documents' language")->required();
    classify_cmd->add_option("--epochs", classify.epochs, "Perceptron epochs")->capture_default_str();
    classify_cmd->add_option("--seed", classify.seed, "Shuffle seed")->capture_default_str();

    // export
    auto* export_cmd = app.add_subcommand("export", "Re-export vectors of a trained model");
    std::string ex_model;
    std::string ex_output;
    std::string ex_which = "target";
    bool ex_unprefixed = false;
    export_cmd->add_option("-m,--model", ex_model, "Model path")->required();
    export_cmd->add_option("-o,--output", ex_output, "Output path")->required();
    export_cmd->add_option("--which", ex_which, "target, context or both")
        ->check(CLI::IsMember({"target", "context", "both"}))
        ->capture_default_str();
    export_cmd->add_flag("--unprefixed", ex_unprefixed, "One file per language without lang: prefixes");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::ostringstream out;
        std::ostringstream err;
        app.exit(e, out, err);
        return HelpRequest{out.str()};
    } catch (const CLI::CallForAllHelp& e) {
        std::ostringstream out;
        std::ostringstream err;
        app.exit(e, out, err);
        return HelpRequest{out.str()};
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    if (train_cmd->parsed()) return finish_train(*train_cmd, train_flags, train_cfg);

    if (query_cmd->parsed()) {
        QueryCommand q;
        q.model = query_model;
        if (!query_word.empty()) q.word = parse_word("--word", query_word);
        q.plus = parse_words("--plus", query_plus);
        q.minus = parse_words("--minus", query_minus);
        q.exclude = parse_words("--exclude", query_exclude);
        for (const auto& t : query_targets) {
            if (t != "all") q.targets.push_back(parse_language("--target", t));
        }
        q.k = query_k;
        if (q.word && (!q.plus.empty() || !q.minus.empty())) {
            throw UsageError("query: --word cannot be combined with --plus/--minus");
        }
        if (!q.word && q.plus.empty() && q.minus.empty()) throw UsageError("query: give --word or --plus/--minus");
        return q;
    }

    if (translate_cmd->parsed()) {
        return TranslateEvalCommand{tr_model, tr_test, parse_language("--source", tr_source),
                                    parse_language("--target", tr_target)};
    }

    if (classify_cmd->parsed()) {
        classify.model = cl_model;
        classify.train_file = cl_train;
        classify.train_lang = parse_language("--train-lang", cl_train_lang);
        classify.test_file = cl_test;
        classify.test_lang = parse_language("--test-lang", cl_test_lang);
        return classify;
    }

    ExportCommand ex;
    ex.model = ex_model;
    ex.output = ex_output;
    ex.which = parse_vector_kind(ex_which);
    ex.prefixed = !ex_unprefixed;
    return ex;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

std::string fixed(double value, int decimals) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

bool model_lowercase(const fs::path& model) {
    const auto path = config_path(model);
    if (!fs::exists(path)) return true;
    const auto values = read_key_value_file(path);
    const auto it = values.find("lowercase");
    if (it == values.end()) return true;
    TrainingConfig cfg;
    cfg.set("lowercase", it->second);
    return cfg.lowercase;
}

SharedSpace load_space(const fs::path& model) { return SharedSpace::from_table(load_embeddings(model)); }

int run_train(const TrainCommand& cmd, std::ostream& out, std::ostream& err) {
    const TrainingConfig& cfg = cmd.config;
    std::vector<MonoCorpus> monos;
    std::vector<AlignedCorpus> bitexts;
    for (const auto& m : cmd.monos) monos.push_back(MonoCorpus::from_file(m.language, m.file, cfg.lowercase));
    for (const auto& b : cmd.bitexts) {
        bitexts.push_back(AlignedCorpus::from_files(cmd.pivot, b.pivot_file, b.language, b.language_file, cfg.lowercase));
    }

    auto vocabs = build_vocabularies(monos, bitexts, cfg.min_count, {cmd.pivot});
    auto model = init_model(std::move(vocabs), cfg.dim, cfg.seed, cmd.pivot);
    ProgressCallback report;
    if (!cmd.quiet) {
        report = [&err](const TrainProgress& p) {
            const double done = p.total_token_budget == 0
                                    ? 100.0
                                    : 100.0 * static_cast<double>(p.tokens_processed) / p.total_token_budget;
            err << "progress=" << fixed(done, 2)
                << " lr=" << fixed(p.current_lr, 6) << " loss=" << fixed(p.running_loss, 6) << '\n'
                << std::flush;
        };
    }
    const auto progress = train(model, monos, bitexts, cfg, report);
    if (report) report(progress);
    for (const auto& w : progress.warnings) err << "warning: " << w << '\n';

    const auto written = save_embeddings(model, cmd.output, VectorKind::both, true);
    auto meta = cfg.to_key_values();
    meta["pivot"] = cmd.pivot.code();
    std::string langs;
    for (const auto& lang : model.languages()) langs += (langs.empty() ? "" : ",") + lang.code();
    meta["languages"] = langs;
    write_key_value_file(config_path(cmd.output), meta);
    if (cmd.vocab_dir) {
        fs::create_directories(*cmd.vocab_dir);
        for (const auto& [lang, lm] : model.per_language()) {
            write_vocabulary(lm.vocab, *cmd.vocab_dir / (lang.code() + ".vocab"));
        }
    }

    for (const auto& [lang, lm] : model.per_language()) {
        out << "language=" << lang << " vocab=" << lm.vocab.size() << " tokens=" << lm.vocab.total_tokens() << '\n';
    }
    for (std::size_t e = 0; e < progress.epoch_mean_loss.size(); ++e) {
        out << "epoch=" << (e + 1) << " loss=" << fixed(progress.epoch_mean_loss[e], 6) << '\n';
    }
    out << "tokens=" << progress.tokens_processed << " pairs=" << progress.pairs
        << " skipped_pairs=" << progress.skipped_pairs << '\n';
    for (const auto& path : written) out << "wrote " << path.string() << '\n';
    out << "wrote " << config_path(cmd.output).string() << '\n';
    return kExitOk;
}

int run_query(const QueryCommand& cmd, std::ostream& out) {
    const auto space = load_space(cmd.model);
    std::vector<LanguageId> targets = cmd.targets.empty() ? space.languages() : cmd.targets;
    const bool tagged = targets.size() > 1;
    for (const auto& target : targets) {
        std::vector<Neighbor> ranked;
        if (cmd.word) {
            NeighborOptions options;
            for (const auto& ex : cmd.exclude) {
                if (ex.language == target) options.exclude.insert(ex.word);
            }
            ranked = nearest_neighbors(space, *cmd.word, target, cmd.k, options);
        } else {
            // Extra exclusions need the full ranking, so over-fetch then filter.
            ranked = arithmetic_query(space, cmd.plus, cmd.minus, target, cmd.k + cmd.exclude.size());
            std::erase_if(ranked, [&](const Neighbor& n) {
                return std::any_of(cmd.exclude.begin(), cmd.exclude.end(),
                                   [&](const TaggedWord& ex) { return ex.language == target && ex.word == n.word; });
            });
            if (ranked.size() > cmd.k) ranked.resize(cmd.k);
        }
        for (const auto& n : ranked) {
            out << (tagged ? format_tagged_word(target, n.word) : n.word) << '\t' << fixed(n.score, 6) << '\n';
        }
    }
    return kExitOk;
}

int run_translate(const TranslateEvalCommand& cmd, std::ostream& out) {
    const auto space = load_space(cmd.model);
    const auto testset = load_translation_testset(cmd.testset, cmd.source, cmd.target, model_lowercase(cmd.model));
    const std::size_t ks[] = {1, 5};
    const auto scores = translation_precision(space, testset, ks);
    out << "P@1=" << fixed(scores[0].precision, 4) << " P@5=" << fixed(scores[1].precision, 4)
        << " oov=" << scores[0].oov << '\n';
    return kExitOk;
}

int run_classify(const ClassifyEvalCommand& cmd, std::ostream& out, std::ostream& err) {
    const auto space = load_space(cmd.model);
    const bool lowercase = model_lowercase(cmd.model);
    const auto train_docs = load_labeled_documents(cmd.train_file, cmd.train_lang, lowercase);
    const auto test_docs = load_labeled_documents(cmd.test_file, cmd.test_lang, lowercase);
    const auto result = classify_crosslingual(space, train_docs, test_docs, {cmd.epochs, cmd.seed, true});
    out << "accuracy=" << fixed(result.accuracy, 4) << " skipped=" << result.skipped_test << '\n';
    err << "test_idf=" << result.test_idf_source << " skipped_train=" << result.skipped_train << '\n';
    return kExitOk;
}

int run_export(const ExportCommand& cmd, std::ostream& out) {
    const auto target = load_embeddings(cmd.model);
    std::optional<EmbeddingTable> context;
    if (cmd.which != VectorKind::target) context = load_embeddings(context_path(cmd.model));
    const auto written = export_embeddings(target, context ? &*context : nullptr, cmd.output, cmd.which, cmd.prefixed);
    for (const auto& path : written) out << "wrote " << path.string() << '\n';
    return kExitOk;
}

}  // namespace

int run(const Command& command, std::ostream& out, std::ostream& err) {
    try {
        return std::visit(
            [&](const auto& cmd) -> int {
                using T = std::decay_t<decltype(cmd)>;
                if constexpr (std::is_same_v<T, HelpRequest>) {
                    out << cmd.text;
                    return kExitOk;
                } else if constexpr (std::is_same_v<T, TrainCommand>) {
                    return run_train(cmd, out, err);
                } else if constexpr (std::is_same_v<T, QueryCommand>) {
                    return run_query(cmd, out);
                } else if constexpr (std::is_same_v<T, TranslateEvalCommand>) {
                    return run_translate(cmd, out);
                } else if constexpr (std::is_same_v<T, ClassifyEvalCommand>) {
                    return run_classify(cmd, out, err);
                } else {
                    return run_export(cmd, out);
                }
            },
            command);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int main(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    Command command;
    try {
        command = parse_args(args);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\nRun with --help for usage.\n";
        return kExitUsage;
    }
    return run(command, std::cout, std::cerr);
}

}  // namespace transgram::cli
