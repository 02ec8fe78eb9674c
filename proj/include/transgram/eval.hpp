#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "transgram/language.hpp"
#include "transgram/model.hpp"

namespace transgram {

class UnknownWordError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class UnknownLanguageError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class ZeroVectorError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// ---------------------------------------------------------------------------
// Target-vector space shared by all evaluations. Context vectors never take
// part in evaluation.

struct LanguageVectors {
    std::size_t dim = 0;
    std::vector<std::string> words;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<float> values;
    std::vector<double> norms;

    std::size_t size() const noexcept { return words.size(); }
    std::span<const float> row(std::size_t i) const noexcept { return {values.data() + i * dim, dim}; }
};

class SharedSpace {
public:
    explicit SharedSpace(std::size_t dim = 0) : dim_(dim) {}

    static SharedSpace from_model(const MultilingualModel& model);
    /// From a prefixed (`lang:word`) embedding table.
    static SharedSpace from_table(const EmbeddingTable& table);

    /// `values` is words.size() x dim, row-major.
    void add_language(const LanguageId& language, std::vector<std::string> words, std::vector<float> values);

    std::size_t dim() const noexcept { return dim_; }
    bool contains(const LanguageId& language) const { return languages_.contains(language); }
    std::vector<LanguageId> languages() const;
    const LanguageVectors& at(const LanguageId& language) const;
    std::span<const float> vector_of(const TaggedWord& word) const;
    bool contains(const TaggedWord& word) const;

private:
    std::size_t dim_;
    std::map<LanguageId, LanguageVectors> languages_;
};

/// u.v / (|u| |v|). Throws ZeroVectorError for a zero vector and
/// std::invalid_argument for mismatched sizes.
double cosine(std::span<const double> u, std::span<const double> v);
double cosine(std::span<const float> u, std::span<const float> v);

struct Neighbor {
    std::string word;
    double score = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

using Query = std::variant<TaggedWord, std::vector<double>>;

struct NeighborOptions {
    /// Words to leave out of the ranking; only those in the target language matter.
    std::set<std::string> exclude;
    /// Drop the query word itself when it is in the target language.
    bool exclude_query_word = true;
};

/// Top-k target-language words by cosine to the query's target vector, sorted
/// by nonincreasing score with lexicographic tie-break.
std::vector<Neighbor> nearest_neighbors(const SharedSpace& space, const Query& query, const LanguageId& target_lang,
                                        std::size_t k, const NeighborOptions& options = {});

/// sum(plus) - sum(minus) over target vectors, then nearest_neighbors()
/// excluding every input word.
std::vector<Neighbor> arithmetic_query(const SharedSpace& space, const std::vector<TaggedWord>& plus,
                                       const std::vector<TaggedWord>& minus, const LanguageId& target_lang,
                                       std::size_t k);

// ---------------------------------------------------------------------------
// Word translation

struct TranslationEntry {
    std::string source;
    std::vector<std::string> acceptable;
};

struct TranslationTestSet {
    LanguageId source_lang;
    LanguageId target_lang;
    std::vector<TranslationEntry> entries;
};

/// TSV `source<TAB>target`; repeated sources accumulate acceptable targets in
/// first-seen order.
TranslationTestSet load_translation_testset(const std::filesystem::path& path, LanguageId source_lang,
                                            LanguageId target_lang, bool lowercase = true);

struct TranslationScore {
    std::size_t k = 0;
    double precision = 0.0;  // hits / entries; out-of-vocabulary sources count as misses
    std::size_t hits = 0;
    std::size_t entries = 0;
    std::size_t oov = 0;
};

TranslationScore translation_precision(const SharedSpace& space, const TranslationTestSet& testset, std::size_t k);
/// One ranking per entry shared across all requested k.
std::vector<TranslationScore> translation_precision(const SharedSpace& space, const TranslationTestSet& testset,
                                                    std::span<const std::size_t> ks);

// ---------------------------------------------------------------------------
// Document classification

struct LabeledDocument {
    std::string label;
    std::vector<std::string> tokens;
    LanguageId language;
};

/// TSV `label<TAB>space-separated tokens`, one document per line.
std::vector<LabeledDocument> load_labeled_documents(const std::filesystem::path& path, LanguageId language,
                                                    bool lowercase = true);

using IdfWeights = std::unordered_map<std::string, double>;

/// ln(N / df(w)). Throws std::invalid_argument for an empty collection.
IdfWeights idf_weights(std::span<const LabeledDocument> documents);

struct DocumentVector {
    std::vector<double> values;
    std::size_t contributing_tokens = 0;  // in-vocabulary tokens with an idf entry

    bool is_zero() const noexcept;
};

/// sum over tokens of idf(w) * target(w); unknown tokens and tokens without an
/// idf entry contribute nothing.
DocumentVector document_vector(const LabeledDocument& doc, const SharedSpace& space, const IdfWeights& idf);

struct LabeledVector {
    std::vector<double> features;
    std::string label;
};

/// Multiclass perceptron with weight averaging. Classes are kept in
/// lexicographic order; ties in the argmax go to the earliest class.
struct PerceptronModel {
    std::vector<std::string> classes;
    std::size_t dim = 0;
    std::vector<std::vector<double>> weights;
    std::vector<double> bias;
    std::vector<std::vector<double>> averaged_weights;
    std::vector<double> averaged_bias;

    /// Uses the averaged weights.
    std::size_t predict_index(std::span<const double> x) const;
    const std::string& predict(std::span<const double> x) const { return classes[predict_index(x)]; }
};

struct PerceptronOptions {
    std::size_t epochs = 10;
    std::uint64_t seed = 1;
    bool shuffle = true;
};

/// On a mistake adds x (and 1 to the bias) to the true class and subtracts it
/// from the predicted class. The averaged weights are the mean of the weight
/// snapshots taken after every example of every epoch. Throws
/// std::invalid_argument when fewer than two classes are present.
PerceptronModel perceptron_train(std::span<const LabeledVector> data, const PerceptronOptions& options = {});

struct ClassificationResult {
    double accuracy = 0.0;  // skipped test documents count as errors
    std::size_t correct = 0;
    std::size_t total = 0;
    std::size_t skipped_train = 0;
    std::size_t skipped_test = 0;
    std::string test_idf_source = "test-documents";
};

/// Trains on documents of one language and tests on another. IDF for each
/// side is computed from that side's own documents.
ClassificationResult classify_crosslingual(const SharedSpace& space, std::span<const LabeledDocument> train_docs,
                                           std::span<const LabeledDocument> test_docs,
                                           const PerceptronOptions& options = {});

}  // namespace transgram
