#include "transgram/corpus.hpp"

#include <locale.h>
#include <wctype.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "transgram/io.hpp"

namespace transgram {

// ---------------------------------------------------------------------------
// Tokenization

namespace {

bool is_space(char ch) {
    return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f';
}

locale_t utf8_locale() {
    static const locale_t loc = [] {
        locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(0));
        if (l == static_cast<locale_t>(0)) l = newlocale(LC_CTYPE_MASK, "en_US.UTF-8", static_cast<locale_t>(0));
        return l;
    }();
    return loc;
}

// Decodes one UTF-8 sequence starting at s[i]; returns its length, or 0 when
// the bytes are not well-formed.
std::size_t decode_utf8(std::string_view s, std::size_t i, char32_t& cp) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    if (b0 < 0x80) {
        cp = b0;
        return 1;
    } else if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return 0;
    }
    if (i + len > s.size()) return 0;
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (b & 0x3F);
    }
    return len;
}

void encode_utf8(char32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string lowercase_token(std::string_view token) {
    std::string out;
    out.reserve(token.size());
    const locale_t loc = utf8_locale();
    for (std::size_t i = 0; i < token.size();) {
        const char ch = token[i];
        if (static_cast<unsigned char>(ch) < 0x80) {
            out.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : ch);
            ++i;
            continue;
        }
        char32_t cp = 0;
        const std::size_t len = decode_utf8(token, i, cp);
        if (len == 0) {
            out.push_back(ch);
            ++i;
            continue;
        }
        if (loc != static_cast<locale_t>(0)) cp = static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
        encode_utf8(cp, out);
        i += len;
    }
    return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view line, bool lowercase) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) ++i;
        const std::size_t start = i;
        while (i < line.size() && !is_space(line[i])) ++i;
        if (i > start) {
            const auto token = line.substr(start, i - start);
            tokens.push_back(lowercase ? lowercase_token(token) : std::string(token));
        }
    }
    return tokens;
}

// ---------------------------------------------------------------------------
// Corpora

MonoCorpus MonoCorpus::from_file(LanguageId language, std::filesystem::path path, bool lowercase) {
    return MonoCorpus(std::move(language), std::move(path), lowercase);
}

MonoCorpus MonoCorpus::from_lines(LanguageId language, std::vector<std::string> lines, bool lowercase) {
    return MonoCorpus(std::move(language), std::move(lines), lowercase);
}

std::optional<std::filesystem::path> MonoCorpus::file() const {
    if (const auto* path = std::get_if<std::filesystem::path>(&source_)) return *path;
    return std::nullopt;
}

std::string MonoCorpus::describe() const {
    if (const auto* path = std::get_if<std::filesystem::path>(&source_)) {
        return language_.code() + ":" + path->string();
    }
    return language_.code() + ":<memory>";
}

namespace {

// Uniform line access over a file or an in-memory buffer.
class LineSource {
public:
    LineSource(const std::variant<std::filesystem::path, std::vector<std::string>>& source) {
        if (const auto* path = std::get_if<std::filesystem::path>(&source)) {
            reader_.emplace(*path);
        } else {
            lines_ = &std::get<std::vector<std::string>>(source);
        }
    }

    bool next(std::string& line) {
        if (reader_) return reader_->next(line);
        if (pos_ >= lines_->size()) return false;
        line = (*lines_)[pos_++];
        return true;
    }

private:
    std::optional<LineReader> reader_;
    const std::vector<std::string>* lines_ = nullptr;
    std::size_t pos_ = 0;
};

}  // namespace

MonoStats MonoCorpus::for_each_sentence(const SentenceCallback& fn) const {
    MonoStats stats;
    LineSource source(source_);
    std::string line;
    while (source.next(line)) {
        ++stats.lines;
        const auto tokens = tokenize(line, lowercase_);
        if (tokens.empty()) continue;
        ++stats.sentences;
        fn(tokens);
    }
    return stats;
}

AlignedCorpus AlignedCorpus::from_files(LanguageId lang_e, std::filesystem::path path_e, LanguageId lang_f,
                                        std::filesystem::path path_f, bool lowercase) {
    if (lang_e == lang_f) throw std::invalid_argument("bitext sides must be different languages: " + lang_e.code());
    return AlignedCorpus(MonoCorpus::from_file(std::move(lang_e), std::move(path_e), lowercase),
                         MonoCorpus::from_file(std::move(lang_f), std::move(path_f), lowercase));
}

AlignedCorpus AlignedCorpus::from_lines(LanguageId lang_e, std::vector<std::string> lines_e, LanguageId lang_f,
                                        std::vector<std::string> lines_f, bool lowercase) {
    if (lang_e == lang_f) throw std::invalid_argument("bitext sides must be different languages: " + lang_e.code());
    return AlignedCorpus(MonoCorpus::from_lines(std::move(lang_e), std::move(lines_e), lowercase),
                         MonoCorpus::from_lines(std::move(lang_f), std::move(lines_f), lowercase));
}

const MonoCorpus& AlignedCorpus::side(const LanguageId& language) const {
    if (language == lang_e()) return side_e_;
    if (language == lang_f()) return side_f_;
    throw std::invalid_argument("bitext " + describe() + " has no side in language " + language.code());
}

std::string AlignedCorpus::describe() const { return side_e_.describe() + " <-> " + side_f_.describe(); }

AlignedStats AlignedCorpus::for_each_pair(const PairCallback& fn) const {
    AlignedStats stats;
    LineSource src_e(side_e_.source_);
    LineSource src_f(side_f_.source_);
    std::string line_e;
    std::string line_f;
    while (true) {
        const bool has_e = src_e.next(line_e);
        const bool has_f = src_f.next(line_f);
        stats.lines_e += has_e ? 1 : 0;
        stats.lines_f += has_f ? 1 : 0;
        if (!has_e || !has_f) {
            while (has_e && src_e.next(line_e)) ++stats.lines_e;
            while (has_f && src_f.next(line_f)) ++stats.lines_f;
            break;
        }
        const auto tokens_e = tokenize(line_e, side_e_.lowercase_);
        const auto tokens_f = tokenize(line_f, side_f_.lowercase_);
        if (tokens_e.empty() || tokens_f.empty()) {
            ++stats.skipped;
            continue;
        }
        ++stats.pairs;
        fn(tokens_e, tokens_f);
    }
    return stats;
}

// ---------------------------------------------------------------------------
// Sampling

AliasTable::AliasTable(std::span<const double> weights) {
    const std::size_t n = weights.size();
    if (n == 0) return;
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0) || !std::isfinite(total)) throw std::invalid_argument("alias table needs positive finite mass");

    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<WordIndex> small;
    std::vector<WordIndex> large;
    for (std::size_t i = 0; i < n; ++i) {
        if (weights[i] < 0.0) throw std::invalid_argument("alias table weights must be nonnegative");
        scaled[i] = weights[i] * static_cast<double>(n) / total;
        (scaled[i] < 1.0 ? small : large).push_back(static_cast<WordIndex>(i));
    }
    while (!small.empty() && !large.empty()) {
        const WordIndex s = small.back();
        small.pop_back();
        const WordIndex l = large.back();
        prob_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    // Leftovers are 1 up to rounding.
    for (WordIndex i : large) {
        prob_[i] = 1.0;
        alias_[i] = i;
    }
    for (WordIndex i : small) {
        prob_[i] = 1.0;
        alias_[i] = i;
    }
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::from_counts(LanguageId language, const std::unordered_map<std::string, std::uint64_t>& counts,
                                   std::uint64_t min_count) {
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (const auto& [word, count] : counts) {
        if (count >= min_count && count > 0) kept.emplace_back(word, count);
    }
    if (kept.empty()) {
        throw EmptyVocabularyError("empty vocabulary for language " + language.code() + " at min_count " +
                                   std::to_string(min_count));
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });

    Vocabulary vocab;
    vocab.language_ = std::move(language);
    vocab.words_.reserve(kept.size());
    vocab.counts_.reserve(kept.size());
    vocab.index_.reserve(kept.size());
    for (auto& [word, count] : kept) {
        vocab.index_.emplace(word, static_cast<WordIndex>(vocab.words_.size()));
        vocab.words_.push_back(std::move(word));
        vocab.counts_.push_back(count);
        vocab.total_tokens_ += count;
    }
    return vocab;
}

std::optional<WordIndex> Vocabulary::find(std::string_view word) const {
    const auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void Vocabulary::apply_subsampling(double threshold) {
    discard_probs_.resize(words_.size());
    const auto total = static_cast<double>(total_tokens_);
    for (std::size_t i = 0; i < words_.size(); ++i) {
        discard_probs_[i] = transgram::discard_probability(static_cast<double>(counts_[i]) / total, threshold);
    }
}

double Vocabulary::sampling_probability(WordIndex index) const {
    if (!has_sampling_table()) throw std::logic_error("vocabulary has no sampling table");
    return sampling_probs_.at(index);
}

void Vocabulary::rebuild_sampling_table(double alpha) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("sampling exponent must be >= 0");
    if (words_.empty()) throw EmptyVocabularyError("cannot build a sampling table for an empty vocabulary");
    std::vector<double> weights(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) {
        weights[i] = std::pow(static_cast<double>(counts_[i]), alpha);
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    sampling_probs_.resize(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) sampling_probs_[i] = weights[i] / total;
    neg_table_ = AliasTable(weights);
    alpha_ = alpha;
}

void TokenCounter::add(std::span<const std::string> tokens) {
    for (const auto& token : tokens) ++counts_[token];
}

void TokenCounter::add(const MonoCorpus& corpus) {
    corpus.for_each_sentence([this](std::span<const std::string> tokens) { add(tokens); });
}

Vocabulary build_vocab(const MonoCorpus& corpus, std::uint64_t min_count) {
    TokenCounter counter;
    counter.add(corpus);
    return Vocabulary::from_counts(corpus.language(), counter.counts(), min_count);
}

std::vector<Vocabulary> build_vocabularies(const std::vector<MonoCorpus>& monos,
                                           const std::vector<AlignedCorpus>& bitexts, std::uint64_t min_count,
                                           const std::vector<LanguageId>& extra) {
    std::map<LanguageId, TokenCounter> counters;
    std::set<std::string> seen_files;
    for (const auto& lang : extra) counters[lang];
    const auto count = [&](const MonoCorpus& corpus) {
        if (const auto path = corpus.file()) {
            const auto key = corpus.language().code() + ":" + std::filesystem::weakly_canonical(*path).string();
            if (!seen_files.insert(key).second) return;
        }
        counters[corpus.language()].add(corpus);
    };
    for (const auto& mono : monos) count(mono);
    for (const auto& bitext : bitexts) {
        count(bitext.side_e());
        count(bitext.side_f());
    }
    std::vector<Vocabulary> vocabs;
    for (const auto& [lang, counter] : counters) vocabs.push_back(Vocabulary::from_counts(lang, counter.counts(), min_count));
    return vocabs;
}

double discard_probability(double freq, double threshold) {
    if (!(freq > 0.0)) throw std::domain_error("discard_probability: frequency must be > 0");
    if (!(threshold > 0.0)) throw std::domain_error("discard_probability: threshold must be > 0");
    return std::max(0.0, 1.0 - std::sqrt(threshold / freq));
}

Vocabulary build_sampling_table(Vocabulary vocab, double alpha) {
    vocab.rebuild_sampling_table(alpha);
    return vocab;
}

WordIndex sample_negative(const Vocabulary& vocab, Rng& rng, std::optional<WordIndex> exclude) {
    if (!vocab.has_sampling_table()) throw std::logic_error("sample_negative: vocabulary has no sampling table");
    if (exclude && vocab.size() < 2) {
        throw std::invalid_argument("sample_negative: cannot exclude the only word of vocabulary " +
                                    vocab.language().code());
    }
    while (true) {
        const WordIndex drawn = vocab.draw(rng);
        if (!exclude || drawn != *exclude) return drawn;
    }
}

void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
    AtomicFileWriter out(path);
    std::string line;
    for (WordIndex i = 0; i < vocab.size(); ++i) {
        line.assign(vocab.word(i));
        line.push_back('\t');
        line.append(std::to_string(vocab.count(i)));
        line.push_back('\n');
        out.write(line);
    }
    out.commit();
}

}  // namespace transgram
