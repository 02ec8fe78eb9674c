#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "transgram/language.hpp"

namespace transgram {

using WordIndex = std::uint32_t;
using Rng = std::mt19937_64;

/// Splits on runs of ASCII whitespace. Lowercasing covers full Unicode case
/// mapping for well-formed UTF-8; malformed bytes are copied through.
std::vector<std::string> tokenize(std::string_view line, bool lowercase = true);

// ---------------------------------------------------------------------------
// Corpora

struct MonoStats {
    std::size_t lines = 0;
    std::size_t sentences = 0;  // nonempty lines
};

using SentenceCallback = std::function<void(std::span<const std::string>)>;

/// One sentence per line, whitespace-separated tokens. Sources are re-read on
/// every pass, so a corpus can be streamed any number of times.
class MonoCorpus {
public:
    static MonoCorpus from_file(LanguageId language, std::filesystem::path path, bool lowercase = true);
    static MonoCorpus from_lines(LanguageId language, std::vector<std::string> lines, bool lowercase = true);

    const LanguageId& language() const noexcept { return language_; }
    /// Source path for file-backed corpora.
    std::optional<std::filesystem::path> file() const;
    std::string describe() const;

    /// Yields every nonempty tokenized sentence.
    MonoStats for_each_sentence(const SentenceCallback& fn) const;

private:
    friend class AlignedCorpus;

    MonoCorpus(LanguageId language, std::variant<std::filesystem::path, std::vector<std::string>> source,
               bool lowercase)
        : language_(std::move(language)), source_(std::move(source)), lowercase_(lowercase) {}

    LanguageId language_;
    std::variant<std::filesystem::path, std::vector<std::string>> source_;
    bool lowercase_;
};

struct AlignedStats {
    std::size_t lines_e = 0;
    std::size_t lines_f = 0;
    std::size_t pairs = 0;    // yielded pairs
    std::size_t skipped = 0;  // candidate pairs with an empty side

    bool line_counts_match() const noexcept { return lines_e == lines_f; }
};

using PairCallback = std::function<void(std::span<const std::string>, std::span<const std::string>)>;

/// Sentence-aligned bitext: line i of side e is aligned with line i of side f.
/// Iteration covers min(lines_e, lines_f) candidate pairs; lines beyond the
/// shorter side are counted but never paired.
class AlignedCorpus {
public:
    static AlignedCorpus from_files(LanguageId lang_e, std::filesystem::path path_e, LanguageId lang_f,
                                    std::filesystem::path path_f, bool lowercase = true);
    static AlignedCorpus from_lines(LanguageId lang_e, std::vector<std::string> lines_e, LanguageId lang_f,
                                    std::vector<std::string> lines_f, bool lowercase = true);

    const LanguageId& lang_e() const noexcept { return side_e_.language(); }
    const LanguageId& lang_f() const noexcept { return side_f_.language(); }
    const MonoCorpus& side_e() const noexcept { return side_e_; }
    const MonoCorpus& side_f() const noexcept { return side_f_; }
    /// The side written in `language`; throws std::invalid_argument if neither.
    const MonoCorpus& side(const LanguageId& language) const;
    std::string describe() const;

    AlignedStats for_each_pair(const PairCallback& fn) const;

private:
    AlignedCorpus(MonoCorpus e, MonoCorpus f) : side_e_(std::move(e)), side_f_(std::move(f)) {}

    MonoCorpus side_e_;
    MonoCorpus side_f_;
};

// ---------------------------------------------------------------------------
// Vocabulary

class EmptyVocabularyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Walker/Vose alias table: O(1) draws from a fixed discrete distribution.
class AliasTable {
public:
    AliasTable() = default;
    explicit AliasTable(std::span<const double> weights);

    std::size_t size() const noexcept { return prob_.size(); }
    bool empty() const noexcept { return prob_.empty(); }

    WordIndex operator()(Rng& rng) const noexcept {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * static_cast<double>(prob_.size());
        auto slot = static_cast<std::size_t>(u);
        if (slot >= prob_.size()) slot = prob_.size() - 1;
        return (u - static_cast<double>(slot)) < prob_[slot] ? static_cast<WordIndex>(slot) : alias_[slot];
    }

private:
    std::vector<double> prob_;
    std::vector<WordIndex> alias_;
};

/// Per-language token inventory. Indices are dense and assigned in descending
/// count order with lexicographic tie-break, so rebuilding from the same data
/// always yields the same indices.
class Vocabulary {
public:
    Vocabulary() = default;

    /// Keeps words with count >= min_count. Throws EmptyVocabularyError when
    /// nothing survives.
    static Vocabulary from_counts(LanguageId language, const std::unordered_map<std::string, std::uint64_t>& counts,
                                  std::uint64_t min_count);

    const LanguageId& language() const noexcept { return language_; }
    std::size_t size() const noexcept { return words_.size(); }
    bool empty() const noexcept { return words_.empty(); }

    const std::string& word(WordIndex index) const { return words_.at(index); }
    const std::vector<std::string>& words() const noexcept { return words_; }
    std::uint64_t count(WordIndex index) const { return counts_.at(index); }
    std::uint64_t total_tokens() const noexcept { return total_tokens_; }
    std::optional<WordIndex> find(std::string_view word) const;

    /// 0 until apply_subsampling() has run.
    double discard_probability(WordIndex index) const noexcept {
        return index < discard_probs_.size() ? discard_probs_[index] : 0.0;
    }
    const std::vector<double>& discard_probabilities() const noexcept { return discard_probs_; }
    void apply_subsampling(double threshold);

    bool has_sampling_table() const noexcept { return !neg_table_.empty(); }
    double sampling_alpha() const noexcept { return alpha_; }
    /// Normalized count^alpha of `index` under the current table.
    double sampling_probability(WordIndex index) const;
    void rebuild_sampling_table(double alpha);
    /// Raw draw from the negative-sampling table (no exclusion).
    WordIndex draw(Rng& rng) const noexcept { return neg_table_(rng); }

private:
    LanguageId language_;
    std::vector<std::string> words_;
    std::unordered_map<std::string, WordIndex> index_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_tokens_ = 0;
    std::vector<double> discard_probs_;
    std::vector<double> sampling_probs_;
    AliasTable neg_table_;
    double alpha_ = 0.0;
};

/// Accumulates token counts from any number of sources for one language.
class TokenCounter {
public:
    void add(std::span<const std::string> tokens);
    void add(const MonoCorpus& corpus);
    const std::unordered_map<std::string, std::uint64_t>& counts() const noexcept { return counts_; }

private:
    std::unordered_map<std::string, std::uint64_t> counts_;
};

Vocabulary build_vocab(const MonoCorpus& corpus, std::uint64_t min_count);

/// One vocabulary per language over all of its text: monolingual corpora and
/// both sides of every bitext. A file that appears more than once is counted
/// once. `extra` languages get an entry even without any text (and then fail
/// with EmptyVocabularyError). Result is in language-code order.
std::vector<Vocabulary> build_vocabularies(const std::vector<MonoCorpus>& monos,
                                           const std::vector<AlignedCorpus>& bitexts, std::uint64_t min_count,
                                           const std::vector<LanguageId>& extra = {});

/// max(0, 1 - sqrt(t / freq)). Throws std::domain_error when freq <= 0 or t <= 0.
double discard_probability(double freq, double threshold);

/// Returns a copy of `vocab` whose negative table draws index i with
/// probability count(i)^alpha / sum_j count(j)^alpha.
Vocabulary build_sampling_table(Vocabulary vocab, double alpha);

/// Draws from the negative table, rejecting `exclude`. Throws
/// std::invalid_argument when the only word in the vocabulary is excluded.
WordIndex sample_negative(const Vocabulary& vocab, Rng& rng, std::optional<WordIndex> exclude = std::nullopt);

/// `word<TAB>count` lines in index order.
void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);

}  // namespace transgram
