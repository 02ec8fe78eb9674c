#include "transgram/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include "transgram/io.hpp"

namespace transgram {

// ---------------------------------------------------------------------------
// Shared space

namespace {

double norm_of(std::span<const float> row) {
    double s = 0.0;
    for (float x : row) s += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(s);
}

}  // namespace

void SharedSpace::add_language(const LanguageId& language, std::vector<std::string> words, std::vector<float> values) {
    if (dim_ == 0) throw std::invalid_argument("shared space has dimension 0");
    if (values.size() != words.size() * dim_) {
        throw std::invalid_argument("vectors for " + language.code() + " do not match " + std::to_string(words.size()) +
                                    " x " + std::to_string(dim_));
    }
    LanguageVectors lv;
    lv.dim = dim_;
    lv.words = std::move(words);
    lv.values = std::move(values);
    lv.index.reserve(lv.words.size());
    lv.norms.resize(lv.words.size());
    for (std::size_t i = 0; i < lv.words.size(); ++i) {
        if (!lv.index.emplace(lv.words[i], i).second) {
            throw std::invalid_argument("duplicate word '" + lv.words[i] + "' in language " + language.code());
        }
        lv.norms[i] = norm_of(lv.row(i));
    }
    languages_[language] = std::move(lv);
}

SharedSpace SharedSpace::from_model(const MultilingualModel& model) {
    SharedSpace space(model.dim());
    for (const auto& [lang, lm] : model.per_language()) {
        const auto target = lm.embeddings.target();
        space.add_language(lang, lm.vocab.words(), std::vector<float>(target.begin(), target.end()));
    }
    return space;
}

SharedSpace SharedSpace::from_table(const EmbeddingTable& table) {
    SharedSpace space(table.dim);
    std::map<LanguageId, std::pair<std::vector<std::string>, std::vector<float>>> grouped;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        auto tagged = parse_tagged_word(table.words[i]);
        auto& [words, values] = grouped[tagged.language];
        words.push_back(std::move(tagged.word));
        const auto row = table.row(i);
        values.insert(values.end(), row.begin(), row.end());
    }
    for (auto& [lang, data] : grouped) space.add_language(lang, std::move(data.first), std::move(data.second));
    return space;
}

std::vector<LanguageId> SharedSpace::languages() const {
    std::vector<LanguageId> out;
    for (const auto& [lang, _] : languages_) out.push_back(lang);
    return out;
}

const LanguageVectors& SharedSpace::at(const LanguageId& language) const {
    const auto it = languages_.find(language);
    if (it == languages_.end()) throw UnknownLanguageError("unknown language: " + language.code());
    return it->second;
}

bool SharedSpace::contains(const TaggedWord& word) const {
    const auto it = languages_.find(word.language);
    return it != languages_.end() && it->second.index.contains(word.word);
}

std::span<const float> SharedSpace::vector_of(const TaggedWord& word) const {
    const auto& lv = at(word.language);
    const auto it = lv.index.find(word.word);
    if (it == lv.index.end()) throw UnknownWordError("unknown word: " + format_tagged_word(word.language, word.word));
    return lv.row(it->second);
}

// ---------------------------------------------------------------------------
// Similarity

namespace {

template <typename A, typename B>
double cosine_impl(std::span<const A> u, std::span<const B> v) {
    if (u.size() != v.size()) throw std::invalid_argument("cosine: dimension mismatch");
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto a = static_cast<double>(u[i]);
        const auto b = static_cast<double>(v[i]);
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (nu == 0.0 || nv == 0.0) throw ZeroVectorError("cosine of a zero vector");
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

bool ranks_before(const Neighbor& a, const Neighbor& b) {
    return a.score != b.score ? a.score > b.score : a.word < b.word;
}

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) { return cosine_impl(u, v); }
double cosine(std::span<const float> u, std::span<const float> v) { return cosine_impl(u, v); }

std::vector<Neighbor> nearest_neighbors(const SharedSpace& space, const Query& query, const LanguageId& target_lang,
                                        std::size_t k, const NeighborOptions& options) {
    const auto& candidates = space.at(target_lang);

    std::vector<double> q;
    const std::string* self = nullptr;
    if (const auto* word = std::get_if<TaggedWord>(&query)) {
        const auto row = space.vector_of(*word);
        q.assign(row.begin(), row.end());
        if (options.exclude_query_word && word->language == target_lang) self = &word->word;
    } else {
        q = std::get<std::vector<double>>(query);
    }
    if (q.size() != space.dim()) throw std::invalid_argument("query vector has the wrong dimension");
    const double qn = std::sqrt(std::inner_product(q.begin(), q.end(), q.begin(), 0.0));
    if (qn == 0.0) throw ZeroVectorError("nearest_neighbors: query vector is zero");

    std::vector<Neighbor> scored;
    scored.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& word = candidates.words[i];
        if (candidates.norms[i] == 0.0) continue;
        if (self != nullptr && word == *self) continue;
        if (options.exclude.contains(word)) continue;
        const auto row = candidates.row(i);
        double dot = 0.0;
        for (std::size_t d = 0; d < q.size(); ++d) dot += q[d] * static_cast<double>(row[d]);
        scored.push_back({word, dot / (qn * candidates.norms[i])});
    }
    const std::size_t n = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), ranks_before);
    scored.resize(n);
    return scored;
}

std::vector<Neighbor> arithmetic_query(const SharedSpace& space, const std::vector<TaggedWord>& plus,
                                       const std::vector<TaggedWord>& minus, const LanguageId& target_lang,
                                       std::size_t k) {
    if (plus.empty() && minus.empty()) throw std::invalid_argument("arithmetic_query: no terms");
    std::vector<double> sum(space.dim(), 0.0);
    NeighborOptions options;
    for (const auto& term : plus) {
        const auto row = space.vector_of(term);
        for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += static_cast<double>(row[d]);
        if (term.language == target_lang) options.exclude.insert(term.word);
    }
    for (const auto& term : minus) {
        const auto row = space.vector_of(term);
        for (std::size_t d = 0; d < sum.size(); ++d) sum[d] -= static_cast<double>(row[d]);
        if (term.language == target_lang) options.exclude.insert(term.word);
    }
    return nearest_neighbors(space, Query{std::move(sum)}, target_lang, k, options);
}

// ---------------------------------------------------------------------------
// Word translation

namespace {

std::vector<std::string> split_tab(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
    }
    return fields;
}

std::string single_token(const std::string& text, bool lowercase) {
    auto tokens = tokenize(text, lowercase);
    if (tokens.size() != 1) return {};
    return std::move(tokens.front());
}

}  // namespace

TranslationTestSet load_translation_testset(const std::filesystem::path& path, LanguageId source_lang,
                                            LanguageId target_lang, bool lowercase) {
    TranslationTestSet set{std::move(source_lang), std::move(target_lang), {}};
    std::unordered_map<std::string, std::size_t> position;
    LineReader reader(path);
    std::string line;
    while (reader.next(line)) {
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto fields = split_tab(line);
        const auto source = fields.size() == 2 ? single_token(fields[0], lowercase) : std::string{};
        const auto target = fields.size() == 2 ? single_token(fields[1], lowercase) : std::string{};
        if (source.empty() || target.empty()) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(reader.line_number()) +
                                        ": expected 'source<TAB>target'");
        }
        const auto [it, inserted] = position.emplace(source, set.entries.size());
        if (inserted) set.entries.push_back({source, {}});
        auto& acceptable = set.entries[it->second].acceptable;
        if (std::find(acceptable.begin(), acceptable.end(), target) == acceptable.end()) acceptable.push_back(target);
    }
    if (set.entries.empty()) throw std::invalid_argument(path.string() + ": empty translation test set");
    return set;
}

std::vector<TranslationScore> translation_precision(const SharedSpace& space, const TranslationTestSet& testset,
                                                    std::span<const std::size_t> ks) {
    if (testset.entries.empty()) throw std::invalid_argument("translation_precision: empty test set");
    std::size_t max_k = 0;
    for (std::size_t k : ks) {
        if (k < 1) throw std::invalid_argument("translation_precision: k must be >= 1");
        max_k = std::max(max_k, k);
    }
    space.at(testset.source_lang);
    space.at(testset.target_lang);

    std::vector<TranslationScore> scores(ks.size());
    for (std::size_t j = 0; j < ks.size(); ++j) {
        scores[j].k = ks[j];
        scores[j].entries = testset.entries.size();
    }
    NeighborOptions options;
    options.exclude_query_word = false;
    std::size_t oov = 0;
    for (const auto& entry : testset.entries) {
        const TaggedWord source{testset.source_lang, entry.source};
        if (!space.contains(source)) {
            ++oov;
            continue;
        }
        const auto ranked = nearest_neighbors(space, source, testset.target_lang, max_k, options);
        // Rank of the best acceptable word, or max_k when none is retrieved.
        std::size_t first_hit = max_k;
        for (std::size_t r = 0; r < ranked.size(); ++r) {
            const auto& acc = entry.acceptable;
            if (std::find(acc.begin(), acc.end(), ranked[r].word) != acc.end()) {
                first_hit = r;
                break;
            }
        }
        for (auto& score : scores) {
            if (first_hit < score.k) ++score.hits;
        }
    }
    for (auto& score : scores) {
        score.oov = oov;
        score.precision = static_cast<double>(score.hits) / static_cast<double>(score.entries);
    }
    return scores;
}

TranslationScore translation_precision(const SharedSpace& space, const TranslationTestSet& testset, std::size_t k) {
    const std::size_t ks[] = {k};
    return translation_precision(space, testset, ks).front();
}

// ---------------------------------------------------------------------------
// Documents

std::vector<LabeledDocument> load_labeled_documents(const std::filesystem::path& path, LanguageId language,
                                                    bool lowercase) {
    std::vector<LabeledDocument> docs;
    LineReader reader(path);
    std::string line;
    while (reader.next(line)) {
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(reader.line_number()) +
                                        ": expected 'label<TAB>tokens'");
        }
        docs.push_back({line.substr(0, tab), tokenize(std::string_view(line).substr(tab + 1), lowercase), language});
    }
    return docs;
}

IdfWeights idf_weights(std::span<const LabeledDocument> documents) {
    if (documents.empty()) throw std::invalid_argument("idf_weights: no documents");
    std::unordered_map<std::string, std::size_t> df;
    std::unordered_set<std::string> seen;
    for (const auto& doc : documents) {
        seen.clear();
        for (const auto& token : doc.tokens) {
            if (seen.insert(token).second) ++df[token];
        }
    }
    const auto n = static_cast<double>(documents.size());
    IdfWeights idf;
    idf.reserve(df.size());
    for (const auto& [word, count] : df) idf.emplace(word, std::log(n / static_cast<double>(count)));
    return idf;
}

bool DocumentVector::is_zero() const noexcept {
    return std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0; });
}

DocumentVector document_vector(const LabeledDocument& doc, const SharedSpace& space, const IdfWeights& idf) {
    const auto& lv = space.at(doc.language);
    DocumentVector out;
    out.values.assign(space.dim(), 0.0);
    for (const auto& token : doc.tokens) {
        const auto row_it = lv.index.find(token);
        if (row_it == lv.index.end()) continue;
        const auto idf_it = idf.find(token);
        if (idf_it == idf.end()) continue;
        ++out.contributing_tokens;
        const auto row = lv.row(row_it->second);
        for (std::size_t d = 0; d < out.values.size(); ++d) out.values[d] += idf_it->second * static_cast<double>(row[d]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Averaged perceptron

std::size_t PerceptronModel::predict_index(std::span<const double> x) const {
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        double s = averaged_bias[c];
        for (std::size_t d = 0; d < dim; ++d) s += averaged_weights[c][d] * x[d];
        if (c == 0 || s > best_score) {
            best = c;
            best_score = s;
        }
    }
    return best;
}

PerceptronModel perceptron_train(std::span<const LabeledVector> data, const PerceptronOptions& options) {
    std::set<std::string> labels;
    for (const auto& ex : data) labels.insert(ex.label);
    if (labels.size() < 2) throw std::invalid_argument("perceptron_train: need at least two classes");

    PerceptronModel model;
    model.classes.assign(labels.begin(), labels.end());
    model.dim = data.front().features.size();
    const std::size_t n_classes = model.classes.size();
    model.weights.assign(n_classes, std::vector<double>(model.dim, 0.0));
    model.bias.assign(n_classes, 0.0);
    auto sum_weights = model.weights;
    auto sum_bias = model.bias;

    std::vector<std::size_t> label_of(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].features.size() != model.dim) throw std::invalid_argument("perceptron_train: ragged features");
        label_of[i] = static_cast<std::size_t>(
            std::lower_bound(model.classes.begin(), model.classes.end(), data[i].label) - model.classes.begin());
    }

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(options.seed);
    std::uint64_t snapshots = 0;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        if (options.shuffle) std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i : order) {
            const auto& x = data[i].features;
            std::size_t predicted = 0;
            double best = 0.0;
            for (std::size_t c = 0; c < n_classes; ++c) {
                double s = model.bias[c];
                for (std::size_t d = 0; d < model.dim; ++d) s += model.weights[c][d] * x[d];
                if (c == 0 || s > best) {
                    predicted = c;
                    best = s;
                }
            }
            const std::size_t truth = label_of[i];
            if (predicted != truth) {
                for (std::size_t d = 0; d < model.dim; ++d) {
                    model.weights[truth][d] += x[d];
                    model.weights[predicted][d] -= x[d];
                }
                model.bias[truth] += 1.0;
                model.bias[predicted] -= 1.0;
            }
            for (std::size_t c = 0; c < n_classes; ++c) {
                for (std::size_t d = 0; d < model.dim; ++d) sum_weights[c][d] += model.weights[c][d];
                sum_bias[c] += model.bias[c];
            }
            ++snapshots;
        }
    }

    model.averaged_weights = std::move(sum_weights);
    model.averaged_bias = std::move(sum_bias);
    if (snapshots > 0) {
        const auto n = static_cast<double>(snapshots);
        for (auto& w : model.averaged_weights) {
            for (auto& x : w) x /= n;
        }
        for (auto& b : model.averaged_bias) b /= n;
    }
    return model;
}

ClassificationResult classify_crosslingual(const SharedSpace& space, std::span<const LabeledDocument> train_docs,
                                           std::span<const LabeledDocument> test_docs,
                                           const PerceptronOptions& options) {
    if (train_docs.empty() || test_docs.empty()) throw std::invalid_argument("classify_crosslingual: empty split");
    ClassificationResult result;

    const auto train_idf = idf_weights(train_docs);
    std::vector<LabeledVector> train;
    for (const auto& doc : train_docs) {
        auto vec = document_vector(doc, space, train_idf);
        if (vec.is_zero()) {
            ++result.skipped_train;
            continue;
        }
        train.push_back({std::move(vec.values), doc.label});
    }
    if (train.empty()) throw std::invalid_argument("classify_crosslingual: every training document vectorized to zero");
    const auto model = perceptron_train(train, options);

    const auto test_idf = idf_weights(test_docs);
    result.total = test_docs.size();
    for (const auto& doc : test_docs) {
        const auto vec = document_vector(doc, space, test_idf);
        if (vec.is_zero()) {
            ++result.skipped_test;
            continue;
        }
        if (model.predict(vec.values) == doc.label) ++result.correct;
    }
    result.accuracy = static_cast<double>(result.correct) / static_cast<double>(result.total);
    return result;
}

}  // namespace transgram
