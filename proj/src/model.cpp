#include "transgram/model.hpp"

#include <charconv>
#include <cmath>
#include <random>

#include "transgram/io.hpp"

namespace transgram {

namespace fs = std::filesystem;

EmbeddingSet::EmbeddingSet(LanguageId language, std::size_t rows, std::size_t dim)
    : language_(std::move(language)), rows_(rows), dim_(dim), target_(rows * dim, 0.0f), context_(rows * dim, 0.0f) {}

bool EmbeddingSet::all_finite() const noexcept {
    for (float x : target_) {
        if (!std::isfinite(x)) return false;
    }
    for (float x : context_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void MultilingualModel::set_pivot(LanguageId pivot) {
    if (!per_language_.contains(pivot)) {
        throw std::invalid_argument("pivot language " + pivot.code() + " is not in the model");
    }
    pivot_ = std::move(pivot);
}

std::vector<LanguageId> MultilingualModel::languages() const {
    std::vector<LanguageId> out;
    out.reserve(per_language_.size());
    for (const auto& [lang, _] : per_language_) out.push_back(lang);
    return out;
}

LanguageModel& MultilingualModel::at(const LanguageId& language) {
    const auto it = per_language_.find(language);
    if (it == per_language_.end()) throw std::out_of_range("unknown language: " + language.code());
    return it->second;
}

const LanguageModel& MultilingualModel::at(const LanguageId& language) const {
    const auto it = per_language_.find(language);
    if (it == per_language_.end()) throw std::out_of_range("unknown language: " + language.code());
    return it->second;
}

bool MultilingualModel::all_finite() const noexcept {
    for (const auto& [_, lm] : per_language_) {
        if (!lm.embeddings.all_finite()) return false;
    }
    return true;
}

MultilingualModel init_model(std::vector<Vocabulary> vocabs, std::size_t dim, std::uint64_t seed,
                             std::optional<LanguageId> pivot) {
    if (vocabs.empty()) throw std::invalid_argument("init_model: no vocabularies");
    if (dim < 1) throw std::invalid_argument("init_model: dim must be >= 1");

    MultilingualModel model;
    model.dim_ = dim;
    const LanguageId default_pivot = vocabs.front().language();
    for (auto& vocab : vocabs) {
        const LanguageId lang = vocab.language();
        if (model.per_language_.contains(lang)) {
            throw std::invalid_argument("init_model: duplicate language " + lang.code());
        }
        EmbeddingSet embeds(lang, vocab.size(), dim);
        model.per_language_.emplace(lang, LanguageModel{std::move(vocab), std::move(embeds)});
    }

    Rng rng(seed);
    const float half_width = 0.5f / static_cast<float>(dim);
    std::uniform_real_distribution<float> uniform(-half_width, half_width);
    for (auto& [_, lm] : model.per_language_) {
        for (float& x : lm.embeddings.target()) x = uniform(rng);
    }
    model.set_pivot(pivot.value_or(default_pivot));
    model.config_.dim = dim;
    model.config_.seed = seed;
    return model;
}

VectorKind parse_vector_kind(const std::string& text) {
    if (text == "target") return VectorKind::target;
    if (text == "context") return VectorKind::context;
    if (text == "both") return VectorKind::both;
    throw std::invalid_argument("expected target, context or both; got '" + text + "'");
}

std::optional<std::size_t> EmbeddingTable::find(const std::string& word) const {
    const auto it = index.find(word);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Writing

namespace {

struct NamedRow {
    std::string name;
    std::span<const float> values;
};

void append_fixed6(std::string& out, float value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, 6);
    out.append(buf, res.ptr);
}

void write_rows(const fs::path& path, std::size_t dim, const std::vector<NamedRow>& rows) {
    AtomicFileWriter out(path);
    std::string line = std::to_string(rows.size()) + " " + std::to_string(dim) + "\n";
    out.write(line);
    for (const auto& row : rows) {
        line.assign(row.name);
        for (float x : row.values) {
            line.push_back(' ');
            append_fixed6(line, x);
        }
        line.push_back('\n');
        out.write(line);
    }
    out.commit();
}

}  // namespace

fs::path embedding_file_path(const fs::path& base, const std::optional<LanguageId>& language, bool context_file) {
    std::string stem = base.string();
    std::string gz;
    if (is_gzip_path(base)) {
        stem.resize(stem.size() - 3);
        gz = ".gz";
    }
    if (language) stem += "." + language->code();
    if (context_file) stem += ".context";
    return fs::path(stem + gz);
}

std::vector<fs::path> save_embeddings(const MultilingualModel& model, const fs::path& path, VectorKind which,
                                      bool prefixed) {
    if (!model.all_finite()) throw std::invalid_argument("save_embeddings: model has non-finite entries");

    std::vector<fs::path> written;
    const auto rows_of = [](const LanguageModel& lm, bool context, bool with_prefix) {
        std::vector<NamedRow> rows;
        rows.reserve(lm.vocab.size());
        for (WordIndex i = 0; i < lm.vocab.size(); ++i) {
            rows.push_back({with_prefix ? format_tagged_word(lm.vocab.language(), lm.vocab.word(i)) : lm.vocab.word(i),
                            context ? lm.embeddings.context_row(i) : lm.embeddings.target_row(i)});
        }
        return rows;
    };

    const auto emit = [&](bool context, bool companion) {
        if (prefixed) {
            std::vector<NamedRow> all;
            for (const auto& [_, lm] : model.per_language()) {
                auto rows = rows_of(lm, context, true);
                all.insert(all.end(), rows.begin(), rows.end());
            }
            const auto file = embedding_file_path(path, std::nullopt, companion);
            write_rows(file, model.dim(), all);
            written.push_back(file);
        } else {
            for (const auto& [lang, lm] : model.per_language()) {
                const auto file = embedding_file_path(path, lang, companion);
                write_rows(file, model.dim(), rows_of(lm, context, false));
                written.push_back(file);
            }
        }
    };

    switch (which) {
        case VectorKind::target:
            emit(false, false);
            break;
        case VectorKind::context:
            emit(true, false);
            break;
        case VectorKind::both:
            emit(false, false);
            emit(true, true);
            break;
    }
    return written;
}

std::vector<fs::path> export_embeddings(const EmbeddingTable& target, const EmbeddingTable* context,
                                        const fs::path& path, VectorKind which, bool prefixed) {
    if (which != VectorKind::target && context == nullptr) {
        throw std::invalid_argument("export: context vectors requested but no context table is available");
    }
    std::vector<fs::path> written;
    const auto emit = [&](const EmbeddingTable& table, bool companion) {
        if (prefixed) {
            std::vector<NamedRow> rows;
            rows.reserve(table.rows());
            for (std::size_t i = 0; i < table.rows(); ++i) rows.push_back({table.words[i], table.row(i)});
            const auto file = embedding_file_path(path, std::nullopt, companion);
            write_rows(file, table.dim, rows);
            written.push_back(file);
            return;
        }
        std::map<LanguageId, std::vector<NamedRow>> by_language;
        for (std::size_t i = 0; i < table.rows(); ++i) {
            auto tagged = parse_tagged_word(table.words[i]);
            by_language[tagged.language].push_back({std::move(tagged.word), table.row(i)});
        }
        for (const auto& [lang, rows] : by_language) {
            const auto file = embedding_file_path(path, lang, companion);
            write_rows(file, table.dim, rows);
            written.push_back(file);
        }
    };
    switch (which) {
        case VectorKind::target:
            emit(target, false);
            break;
        case VectorKind::context:
            emit(*context, false);
            break;
        case VectorKind::both:
            emit(target, false);
            emit(*context, true);
            break;
    }
    return written;
}

// ---------------------------------------------------------------------------
// Reading

namespace {

bool is_field_sep(char ch) { return ch == ' ' || ch == '\t'; }

std::string where(const fs::path& path, std::size_t line) { return path.string() + ":" + std::to_string(line) + ": "; }

}  // namespace

EmbeddingTable load_embeddings(const fs::path& path) {
    using Kind = EmbeddingFormatError::Kind;
    LineReader reader(path);
    std::string line;
    if (!reader.next(line)) throw EmbeddingFormatError(Kind::malformed_header, where(path, 1) + "missing header");

    std::size_t rows = 0;
    std::size_t dim = 0;
    {
        const char* p = line.data();
        const char* end = p + line.size();
        auto r1 = std::from_chars(p, end, rows);
        if (r1.ec != std::errc{} || r1.ptr == end || *r1.ptr != ' ') {
            throw EmbeddingFormatError(Kind::malformed_header, where(path, 1) + "expected '<rows> <dim>' header");
        }
        auto r2 = std::from_chars(r1.ptr + 1, end, dim);
        const char* tail = r2.ptr;
        while (tail != end && is_field_sep(*tail)) ++tail;
        if (r2.ec != std::errc{} || tail != end || dim == 0) {
            throw EmbeddingFormatError(Kind::malformed_header, where(path, 1) + "expected '<rows> <dim>' header");
        }
    }

    EmbeddingTable table;
    table.dim = dim;
    table.words.reserve(rows);
    table.index.reserve(rows);
    table.values.reserve(rows * dim);
    while (reader.next(line)) {
        const std::size_t lineno = reader.line_number();
        if (line.empty()) continue;
        if (table.words.size() == rows) {
            throw EmbeddingFormatError(Kind::row_count_mismatch,
                                       where(path, lineno) + "more rows than the header's " + std::to_string(rows));
        }
        const char* p = line.data();
        const char* end = p + line.size();
        const char* word_end = p;
        while (word_end != end && !is_field_sep(*word_end)) ++word_end;
        std::string word(p, word_end);
        if (word.empty()) throw EmbeddingFormatError(Kind::malformed_row, where(path, lineno) + "empty word");

        std::size_t parsed = 0;
        p = word_end;
        while (true) {
            while (p != end && is_field_sep(*p)) ++p;
            if (p == end) break;
            float value = 0.0f;
            const auto res = std::from_chars(p, end, value);
            if (res.ec != std::errc{} || (res.ptr != end && !is_field_sep(*res.ptr))) {
                throw EmbeddingFormatError(Kind::malformed_row, where(path, lineno) + "bad number in row for '" + word + "'");
            }
            if (parsed < dim) table.values.push_back(value);
            ++parsed;
            p = res.ptr;
        }
        if (parsed != dim) {
            throw EmbeddingFormatError(Kind::dimension_mismatch, where(path, lineno) + "row for '" + word + "' has " +
                                                                     std::to_string(parsed) + " values, header says " +
                                                                     std::to_string(dim));
        }
        if (!table.index.emplace(word, table.words.size()).second) {
            throw EmbeddingFormatError(Kind::duplicate_word, where(path, lineno) + "duplicate word '" + word + "'");
        }
        table.words.push_back(std::move(word));
    }
    if (table.words.size() != rows) {
        throw EmbeddingFormatError(Kind::row_count_mismatch, path.string() + ": header declares " + std::to_string(rows) +
                                                                 " rows, file has " + std::to_string(table.words.size()));
    }
    return table;
}

}  // namespace transgram
