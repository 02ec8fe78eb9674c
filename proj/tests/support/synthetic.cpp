#include "synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace transgram::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& line : lines) out << line << '\n';
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t TopicLayout::topic_of(std::size_t id) const {
    if (id < shared_words) return topics;
    return std::min((id - shared_words) / words_per_topic(), topics - 1);
}

namespace {

constexpr std::size_t kSuccessors = 6;
constexpr double kSharedJump = 0.15;
constexpr double kPreferredShared = 0.7;

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

BigramGenerator::BigramGenerator(TopicLayout layout, std::uint64_t seed) : layout_(layout) {
    if (layout_.topics == 0 || layout_.words_per_topic() < kSuccessors + 1) {
        throw std::invalid_argument("BigramGenerator: too few words per topic");
    }
    std::mt19937_64 rng(seed);
    const std::size_t per_topic = layout_.words_per_topic();
    zipf_.resize(per_topic);
    for (std::size_t r = 0; r < per_topic; ++r) zipf_[r] = 1.0 / std::pow(static_cast<double>(r + 1), 0.6);
    for (std::size_t r = 0; r < layout_.shared_words; ++r) {
        shared_zipf_.push_back(1.0 / std::pow(static_cast<double>(r + 1), 0.6));
    }
    preferred_shared_.assign(layout_.vocab_size, 0);

    successors_.resize(layout_.vocab_size);
    successor_weights_.resize(layout_.vocab_size);
    for (std::size_t id = layout_.shared_words; id < layout_.vocab_size; ++id) {
        const std::size_t topic = layout_.topic_of(id);
        const std::size_t first = layout_.shared_words + topic * per_topic;
        std::vector<std::size_t> pool(per_topic);
        std::iota(pool.begin(), pool.end(), first);
        std::erase(pool, id);
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(kSuccessors);
        successors_[id] = pool;
        for (std::size_t s = 0; s < kSuccessors; ++s) successor_weights_[id].push_back(1.0 / static_cast<double>(s + 1));
        if (layout_.shared_words > 0) preferred_shared_[id] = uniform_index(rng, layout_.shared_words);
    }
    // Shared words lead to topic ranks; the actual word depends on the
    // sentence topic.
    for (std::size_t id = 0; id < layout_.shared_words; ++id) {
        std::vector<std::size_t> ranks(per_topic);
        std::iota(ranks.begin(), ranks.end(), 0);
        std::shuffle(ranks.begin(), ranks.end(), rng);
        ranks.resize(kSuccessors);
        successors_[id] = ranks;
        for (std::size_t s = 0; s < kSuccessors; ++s) successor_weights_[id].push_back(1.0 / static_cast<double>(s + 1));
    }
}

std::size_t BigramGenerator::draw_shared_word(std::mt19937_64& rng, std::size_t current) const {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (current >= layout_.shared_words && coin(rng) < kPreferredShared) return preferred_shared_[current];
    std::discrete_distribution<std::size_t> pick(shared_zipf_.begin(), shared_zipf_.end());
    return pick(rng);
}

std::size_t BigramGenerator::draw_topic_word(std::mt19937_64& rng, std::size_t topic) const {
    std::discrete_distribution<std::size_t> pick(zipf_.begin(), zipf_.end());
    return layout_.shared_words + topic * layout_.words_per_topic() + pick(rng);
}

BaseSentence BigramGenerator::sentence(std::mt19937_64& rng, std::size_t topic) const {
    BaseSentence out;
    out.topic = topic;
    const std::size_t length = std::uniform_int_distribution<std::size_t>(6, 14)(rng);
    std::size_t current = draw_topic_word(rng, topic);
    out.ids.push_back(current);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    while (out.ids.size() < length) {
        if (layout_.shared_words > 0 && current >= layout_.shared_words && coin(rng) < kSharedJump) {
            current = draw_shared_word(rng, current);
            out.ids.push_back(current);
            continue;
        }
        const auto& w = successor_weights_[current];
        std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
        const std::size_t next = successors_[current][pick(rng)];
        current = current < layout_.shared_words
                      ? layout_.shared_words + topic * layout_.words_per_topic() + next
                      : next;
        out.ids.push_back(current);
    }
    return out;
}

BaseSentence BigramGenerator::sentence(std::mt19937_64& rng) const {
    return sentence(rng, uniform_index(rng, layout_.topics));
}

std::vector<BaseSentence> BigramGenerator::corpus(std::size_t n, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::vector<BaseSentence> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sentence(rng));
    return out;
}

RenamedLanguage::RenamedLanguage(LanguageId language, std::size_t vocab_size, std::uint64_t seed)
    : language_(std::move(language)) {
    std::vector<std::size_t> perm(vocab_size);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    names_.reserve(vocab_size);
    for (std::size_t id = 0; id < vocab_size; ++id) {
        names_.push_back(language_.code() + "w" + std::to_string(perm[id]));
    }
}

std::string RenamedLanguage::render(const std::vector<std::size_t>& ids) const {
    std::string line;
    for (std::size_t id : ids) {
        if (!line.empty()) line += ' ';
        line += names_.at(id);
    }
    return line;
}

std::vector<std::string> RenamedLanguage::render(const std::vector<BaseSentence>& sentences) const {
    std::vector<std::string> lines;
    lines.reserve(sentences.size());
    for (const auto& s : sentences) lines.push_back(render(s.ids));
    return lines;
}

std::vector<std::uint64_t> base_counts(const std::vector<BaseSentence>& sentences, std::size_t vocab_size) {
    std::vector<std::uint64_t> counts(vocab_size, 0);
    for (const auto& s : sentences) {
        for (std::size_t id : s.ids) ++counts.at(id);
    }
    return counts;
}

TranslationTestSet rename_testset(const RenamedLanguage& from, const RenamedLanguage& to,
                                  const std::vector<std::uint64_t>& counts, std::uint64_t min_count) {
    TranslationTestSet set{from.language(), to.language(), {}};
    for (std::size_t id = 0; id < counts.size(); ++id) {
        if (counts[id] >= min_count) set.entries.push_back({from.word(id), {to.word(id)}});
    }
    return set;
}

std::vector<LabeledDocument> topic_documents(const BigramGenerator& gen, const RenamedLanguage& lang, std::size_t n,
                                             std::size_t sentences_per_doc, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<LabeledDocument> docs;
    docs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t topic = i % gen.layout().topics;
        LabeledDocument doc{"topic" + std::to_string(topic), {}, lang.language()};
        for (std::size_t s = 0; s < sentences_per_doc; ++s) {
            for (std::size_t id : gen.sentence(rng, topic).ids) doc.tokens.push_back(lang.word(id));
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

}  // namespace transgram::testing
