#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "transgram/config.hpp"
#include "transgram/corpus.hpp"
#include "transgram/language.hpp"

namespace transgram {

/// Target and context matrices for one language, both rows x dim, row-major.
class EmbeddingSet {
public:
    EmbeddingSet() = default;
    EmbeddingSet(LanguageId language, std::size_t rows, std::size_t dim);

    const LanguageId& language() const noexcept { return language_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<float> target_row(WordIndex i) noexcept { return {target_.data() + i * dim_, dim_}; }
    std::span<const float> target_row(WordIndex i) const noexcept { return {target_.data() + i * dim_, dim_}; }
    std::span<float> context_row(WordIndex i) noexcept { return {context_.data() + i * dim_, dim_}; }
    std::span<const float> context_row(WordIndex i) const noexcept { return {context_.data() + i * dim_, dim_}; }

    std::span<float> target() noexcept { return target_; }
    std::span<const float> target() const noexcept { return target_; }
    std::span<float> context() noexcept { return context_; }
    std::span<const float> context() const noexcept { return context_; }

    bool all_finite() const noexcept;

    friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

private:
    LanguageId language_;
    std::size_t rows_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> target_;
    std::vector<float> context_;
};

struct LanguageModel {
    Vocabulary vocab;
    EmbeddingSet embeddings;
};

/// Every language's vocabulary and embeddings in one shared space, plus the
/// pivot that all bitexts pair with.
class MultilingualModel {
public:
    const LanguageId& pivot() const noexcept { return pivot_; }
    void set_pivot(LanguageId pivot);
    std::size_t dim() const noexcept { return dim_; }

    std::vector<LanguageId> languages() const;
    bool contains(const LanguageId& language) const { return per_language_.contains(language); }
    /// Throws std::out_of_range naming the language.
    LanguageModel& at(const LanguageId& language);
    const LanguageModel& at(const LanguageId& language) const;
    const std::map<LanguageId, LanguageModel>& per_language() const noexcept { return per_language_; }

    const TrainingConfig& config_snapshot() const noexcept { return config_; }
    void set_config_snapshot(const TrainingConfig& config) { config_ = config; }

    bool all_finite() const noexcept;

private:
    friend MultilingualModel init_model(std::vector<Vocabulary>, std::size_t, std::uint64_t,
                                        std::optional<LanguageId>);

    LanguageId pivot_;
    std::size_t dim_ = 0;
    std::map<LanguageId, LanguageModel> per_language_;
    TrainingConfig config_;
};

/// Targets uniform in [-0.5/dim, 0.5/dim], contexts zero. Languages are
/// initialized in code order from one generator, so a fixed seed reproduces
/// the model bit for bit. The pivot defaults to the first vocabulary's language.
MultilingualModel init_model(std::vector<Vocabulary> vocabs, std::size_t dim, std::uint64_t seed,
                             std::optional<LanguageId> pivot = std::nullopt);

// ---------------------------------------------------------------------------
// Text persistence: `<rows> <dim>` header, then `word v1 ... vD` rows with six
// decimals. Prefixed files name rows `lang:word`.

enum class VectorKind { target, context, both };

VectorKind parse_vector_kind(const std::string& text);

class EmbeddingFormatError : public std::runtime_error {
public:
    enum class Kind { malformed_header, malformed_row, dimension_mismatch, duplicate_word, row_count_mismatch };

    EmbeddingFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// A loaded embedding file: rows in file order.
struct EmbeddingTable {
    std::size_t dim = 0;
    std::vector<std::string> words;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<float> values;

    std::size_t rows() const noexcept { return words.size(); }
    std::span<const float> row(std::size_t i) const noexcept { return {values.data() + i * dim, dim}; }
    std::optional<std::size_t> find(const std::string& word) const;
};

EmbeddingTable load_embeddings(const std::filesystem::path& path);

/// Path of one output file. `base` may end in ".gz"; suffixes go before it:
/// `<stem>[.<lang>][.context][.gz]`.
std::filesystem::path embedding_file_path(const std::filesystem::path& base, const std::optional<LanguageId>& language,
                                          bool context_file);

/// Prefixed mode writes one file for the whole space; unprefixed mode writes
/// one file per language. `both` adds a `.context` companion next to each
/// target file. Returns the written paths.
std::vector<std::filesystem::path> save_embeddings(const MultilingualModel& model, const std::filesystem::path& path,
                                                   VectorKind which, bool prefixed);

/// Re-exports a prefixed target table (and optional prefixed context table)
/// with the same file layout rules as save_embeddings().
std::vector<std::filesystem::path> export_embeddings(const EmbeddingTable& target, const EmbeddingTable* context,
                                                     const std::filesystem::path& path, VectorKind which,
                                                     bool prefixed);

}  // namespace transgram
