#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "transgram/eval.hpp"

using namespace transgram;
using transgram::testing::TempDir;
using transgram::testing::write_lines;

namespace {

const LanguageId en("en"), fr("fr");

TaggedWord tw(const LanguageId& lang, const std::string& word) { return {lang, word}; }

std::vector<std::string> words_of(const std::vector<Neighbor>& ns) {
    std::vector<std::string> out;
    for (const auto& n : ns) out.push_back(n.word);
    return out;
}

/// Random space over two languages, mirrored into the oracle representation.
struct RandomSpace {
    SharedSpace space;
    oracle::Space reference;

    RandomSpace(std::size_t words, std::size_t dim, std::uint64_t seed) : space(dim) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<float> normal(0.0f, 1.0f);
        for (const auto& lang : {en, fr}) {
            std::vector<std::string> names;
            std::vector<float> values;
            for (std::size_t i = 0; i < words; ++i) {
                names.push_back(lang.code() + std::to_string(i));
                oracle::Vec v;
                for (std::size_t d = 0; d < dim; ++d) {
                    values.push_back(normal(rng));
                    v.push_back(values.back());
                }
                reference.vectors[lang.code()][names.back()] = v;
            }
            space.add_language(lang, names, values);
        }
    }
};

}  // namespace

TEST_CASE("cosine") {
    const std::vector<double> x{1, 0}, y{1, 1}, z{0, 0}, w{1, 2, 3};
    CHECK(cosine(std::span<const double>(x), std::span<const double>(x)) == doctest::Approx(1.0));
    CHECK(cosine(std::span<const double>(x), std::span<const double>(y)) == doctest::Approx(0.70711).epsilon(1e-5));
    const std::vector<double> neg{-2, 0};
    CHECK(cosine(std::span<const double>(x), std::span<const double>(neg)) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(cosine(std::span<const double>(x), std::span<const double>(z)), ZeroVectorError);
    CHECK_THROWS_AS(cosine(std::span<const double>(x), std::span<const double>(w)), std::invalid_argument);
}

TEST_CASE("nearest neighbours: small example") {
    SharedSpace space(2);
    space.add_language(en, {"a", "b", "c"}, {1, 0, 0.9f, 0.1f, 0, 1});
    const auto ns = nearest_neighbors(space, tw(en, "a"), en, 2);
    CHECK(words_of(ns) == std::vector<std::string>{"b", "c"});
    CHECK(ns[0].score == doctest::Approx(0.9 / std::sqrt(0.82)).epsilon(1e-6));

    NeighborOptions keep;
    keep.exclude_query_word = false;
    CHECK(words_of(nearest_neighbors(space, tw(en, "a"), en, 1, keep)) == std::vector<std::string>{"a"});

    const std::vector<double> q{0.0, 1.0};
    CHECK(words_of(nearest_neighbors(space, q, en, 1)) == std::vector<std::string>{"c"});
    CHECK(nearest_neighbors(space, tw(en, "a"), en, 10).size() == 2);
    CHECK(nearest_neighbors(space, tw(en, "a"), en, 0).empty());

    CHECK_THROWS_AS(nearest_neighbors(space, tw(en, "zz"), en, 1), UnknownWordError);
    CHECK_THROWS_AS(nearest_neighbors(space, tw(en, "a"), fr, 1), UnknownLanguageError);
}

TEST_CASE("nearest neighbours: ties go to the lexicographically smaller word") {
    SharedSpace space(2);
    space.add_language(en, {"q", "zeta", "alpha", "mid"}, {1, 0, 2, 0, 3, 0, 1, 1});
    const auto ns = nearest_neighbors(space, tw(en, "q"), en, 3);
    CHECK(words_of(ns) == std::vector<std::string>{"alpha", "zeta", "mid"});
}

TEST_CASE("nearest neighbours agree with the full-sort oracle") {
    RandomSpace rs(300, 16, 4);
    for (std::size_t i = 0; i < 40; ++i) {
        const std::string src = "en" + std::to_string(i * 7);
        const auto& q = rs.reference.vectors.at("en").at(src);
        for (const auto& target : {en, fr}) {
            std::set<std::string> exclude;
            if (target == en) exclude.insert(src);
            const auto expect = oracle::nearest(rs.reference, q, target.code(), 10, exclude);
            const auto got = nearest_neighbors(rs.space, tw(en, src), target, 10);
            REQUIRE(got.size() == expect.size());
            for (std::size_t j = 0; j < got.size(); ++j) {
                CHECK(got[j].word == expect[j].first);
                CHECK(got[j].score == doctest::Approx(expect[j].second).epsilon(1e-6));
            }
            for (std::size_t j = 1; j < got.size(); ++j) CHECK(got[j - 1].score >= got[j].score);
        }
    }
}

TEST_CASE("vector arithmetic") {
    SUBCASE("constructed analogy") {
        SharedSpace space(3);
        // king - man + woman = queen exactly.
        space.add_language(en, {"king", "man", "woman", "queen", "apple"},
                           {1, 1, 0, 1, 0, 0, 0, 0, 1, 0, 1, 1, 0.2f, -1, 0.3f});
        const auto ns = arithmetic_query(space, {tw(en, "king"), tw(en, "woman")}, {tw(en, "man")}, en, 1);
        REQUIRE(ns.size() == 1);
        CHECK(ns[0].word == "queen");
        CHECK(ns[0].score == doctest::Approx(1.0));
    }
    SUBCASE("w - w + c ranks like c with the inputs excluded") {
        RandomSpace rs(100, 8, 5);
        const auto got = arithmetic_query(rs.space, {tw(en, "en3"), tw(en, "en9")}, {tw(en, "en3")}, en, 5);
        NeighborOptions opts;
        opts.exclude = {"en3", "en9"};
        const auto plain = nearest_neighbors(rs.space, tw(en, "en9"), en, 5, opts);
        CHECK(words_of(got) == words_of(plain));
    }
    SUBCASE("cross-lingual arithmetic matches the oracle") {
        RandomSpace rs(100, 8, 6);
        const auto got = arithmetic_query(rs.space, {tw(en, "en1"), tw(fr, "fr2")}, {tw(fr, "fr3")}, fr, 7);
        const auto expect = oracle::arithmetic(rs.reference, {{"en", "en1"}, {"fr", "fr2"}}, {{"fr", "fr3"}}, "fr", 7);
        REQUIRE(got.size() == expect.size());
        for (std::size_t j = 0; j < got.size(); ++j) CHECK(got[j].word == expect[j].first);
    }
    SUBCASE("unknown input") {
        RandomSpace rs(10, 4, 7);
        CHECK_THROWS_AS(arithmetic_query(rs.space, {tw(en, "nope")}, {}, fr, 3), UnknownWordError);
    }
}

TEST_CASE("translation precision") {
    SUBCASE("identical spaces give P@1 = 1") {
        SharedSpace space(3);
        const std::vector<float> values{1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 0};
        space.add_language(en, {"one", "two", "three", "four"}, values);
        space.add_language(fr, {"un", "deux", "trois", "quatre"}, values);
        const TranslationTestSet set{en, fr, {{"one", {"un"}}, {"two", {"deux"}}, {"three", {"trois"}}, {"four", {"quatre"}}}};
        const auto s = translation_precision(space, set, 1);
        CHECK(s.precision == 1.0);
        CHECK(s.hits == 4);
        CHECK(s.oov == 0);
    }
    SUBCASE("out-of-vocabulary sources are misses") {
        SharedSpace space(2);
        space.add_language(en, {"a"}, {1, 0});
        space.add_language(fr, {"x", "y"}, {1, 0, 0, 1});
        const TranslationTestSet set{en, fr, {{"a", {"x"}}, {"b", {"y"}}}};
        const auto s = translation_precision(space, set, 1);
        CHECK(s.precision == 0.5);
        CHECK(s.entries == 2);
        CHECK(s.oov == 1);
    }
    SUBCASE("monotone in k and equal to the oracle") {
        RandomSpace rs(200, 6, 8);
        TranslationTestSet set{en, fr, {}};
        std::vector<std::pair<std::string, std::vector<std::string>>> ref;
        for (std::size_t i = 0; i < 150; ++i) {
            TranslationEntry e{"en" + std::to_string(i), {"fr" + std::to_string(i), "fr" + std::to_string(i + 1)}};
            if (i % 10 == 0) e.source = "missing" + std::to_string(i);
            set.entries.push_back(e);
            ref.emplace_back(e.source, e.acceptable);
        }
        const std::vector<std::size_t> ks{1, 5, 10, 50};
        const auto scores = translation_precision(rs.space, set, ks);
        for (std::size_t j = 0; j < ks.size(); ++j) {
            CHECK(scores[j].k == ks[j]);
            CHECK(scores[j].oov == 15);
            CHECK(scores[j].precision == doctest::Approx(oracle::precision_at_k(rs.reference, "en", "fr", ref, ks[j])));
            CHECK(scores[j].precision == doctest::Approx(translation_precision(rs.space, set, ks[j]).precision));
            if (j > 0) CHECK(scores[j].precision >= scores[j - 1].precision);
        }
    }
}

TEST_CASE("translation test set loader") {
    TempDir dir;
    write_lines(dir / "t.tsv", {"Dog\tChien", "dog\tclebs", "cat\tchat", "", "DOG\tchien"});
    const auto set = load_translation_testset(dir / "t.tsv", en, fr);
    REQUIRE(set.entries.size() == 2);
    CHECK(set.entries[0].source == "dog");
    CHECK(set.entries[0].acceptable == std::vector<std::string>{"chien", "clebs"});
    CHECK(set.entries[1].acceptable == std::vector<std::string>{"chat"});
    const auto cased = load_translation_testset(dir / "t.tsv", en, fr, false);
    CHECK(cased.entries.size() == 4);

    write_lines(dir / "bad.tsv", {"dog\tchien", "bad line"});
    CHECK_THROWS_AS(load_translation_testset(dir / "bad.tsv", en, fr), std::invalid_argument);
    write_lines(dir / "empty.tsv", {""});
    CHECK_THROWS_AS(load_translation_testset(dir / "empty.tsv", en, fr), std::invalid_argument);
}

TEST_CASE("idf weights") {
    const auto doc = [](std::vector<std::string> tokens) { return LabeledDocument{"x", std::move(tokens), en}; };
    SUBCASE("a word in every document weighs zero") {
        const std::vector<LabeledDocument> docs{doc({"a", "b"}), doc({"a"}), doc({"a", "a"})};
        const auto idf = idf_weights(docs);
        CHECK(idf.at("a") == 0.0);
        CHECK(idf.at("b") == doctest::Approx(std::log(3.0)));
    }
    SUBCASE("recount oracle") {
        std::mt19937_64 rng(12);
        std::vector<LabeledDocument> docs;
        std::vector<std::vector<std::string>> raw;
        for (int i = 0; i < 100; ++i) {
            std::vector<std::string> tokens;
            const int n = std::uniform_int_distribution<int>(1, 20)(rng);
            for (int t = 0; t < n; ++t) tokens.push_back("w" + std::to_string(std::geometric_distribution<int>(0.2)(rng)));
            raw.push_back(tokens);
            docs.push_back(doc(tokens));
        }
        const auto idf = idf_weights(docs);
        const auto expect = oracle::idf(raw);
        CHECK(idf.size() == expect.size());
        for (const auto& [w, v] : expect) CHECK(idf.at(w) == doctest::Approx(v).epsilon(1e-12));
    }
    CHECK_THROWS_AS(idf_weights(std::span<const LabeledDocument>{}), std::invalid_argument);
}

TEST_CASE("document vectors") {
    SharedSpace space(2);
    space.add_language(en, {"a", "b"}, {1, 0, 0, 2});
    const IdfWeights idf{{"a", 0.5}, {"b", 2.0}, {"c", 1.0}};

    const auto v = document_vector({"x", {"a", "b", "a", "zz", "c"}, en}, space, idf);
    CHECK(v.values == std::vector<double>{1.0, 4.0});
    CHECK(v.contributing_tokens == 3);
    CHECK_FALSE(v.is_zero());

    const auto empty = document_vector({"x", {"zz", "c"}, en}, space, idf);
    CHECK(empty.is_zero());
    CHECK(empty.contributing_tokens == 0);

    // Tokens without an idf entry add nothing.
    const auto partial = document_vector({"x", {"a", "b"}, en}, space, IdfWeights{{"a", 1.0}});
    CHECK(partial.values == std::vector<double>{1.0, 0.0});

    const auto ref = oracle::document_vector({"a", "b", "a", "zz", "c"}, {{"a", {1, 0}}, {"b", {0, 2}}},
                                             {{"a", 0.5}, {"b", 2.0}, {"c", 1.0}}, 2);
    CHECK(ref == v.values);
}

TEST_CASE("averaged perceptron") {
    SUBCASE("separable data is learned") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<LabeledVector> data;
        for (int i = 0; i < 200; ++i) {
            const double x = u(rng), y = u(rng);
            if (std::abs(x + y) < 0.1) continue;
            data.push_back({{x, y}, x + y > 0 ? "pos" : "neg"});
        }
        const auto model = perceptron_train(data, {20, 1, true});
        CHECK(model.classes == std::vector<std::string>{"neg", "pos"});
        std::size_t correct = 0;
        for (const auto& ex : data) correct += model.predict(ex.features) == ex.label ? 1 : 0;
        CHECK(correct == data.size());
    }
    SUBCASE("zero epochs predicts the first class") {
        const std::vector<LabeledVector> data{{{1.0}, "b"}, {{-1.0}, "a"}};
        const auto model = perceptron_train(data, {0, 1, true});
        const std::vector<double> x{5.0};
        CHECK(model.predict(x) == "a");
    }
    SUBCASE("three examples by hand") {
        // Classes a < b. w and bias start at zero; ties go to a.
        //  1: x=(1,0) label b, predicted a -> w_b=(1,0) b_b=1, w_a=(-1,0) b_a=-1
        //  2: x=(0,1) label a, scores a=-1, b=1 -> w_a=(-1,1) b_a=0, w_b=(1,-1) b_b=0
        //  3: x=(1,1) label b, scores a=0, b=0 -> tie to a -> w_b=(2,0) b_b=1, w_a=(-2,0) b_a=-1
        // Average of the three snapshots.
        const std::vector<LabeledVector> data{{{1, 0}, "b"}, {{0, 1}, "a"}, {{1, 1}, "b"}};
        const auto model = perceptron_train(data, {1, 1, false});
        REQUIRE(model.averaged_weights.size() == 2);
        CHECK(model.averaged_weights[0][0] == doctest::Approx(-4.0 / 3));
        CHECK(model.averaged_weights[0][1] == doctest::Approx(1.0 / 3));
        CHECK(model.averaged_weights[1][0] == doctest::Approx(4.0 / 3));
        CHECK(model.averaged_weights[1][1] == doctest::Approx(-1.0 / 3));
        CHECK(model.averaged_bias[0] == doctest::Approx(-2.0 / 3));
        CHECK(model.averaged_bias[1] == doctest::Approx(2.0 / 3));
        CHECK(model.weights[1] == std::vector<double>{2, 0});
    }
    SUBCASE("matches the snapshot oracle without shuffling") {
        std::mt19937_64 rng(9);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<LabeledVector> data;
        std::vector<std::pair<oracle::Vec, std::string>> ref;
        for (int i = 0; i < 60; ++i) {
            const int label = i % 3;
            oracle::Vec x{normal(rng) + label, normal(rng) - label, normal(rng)};
            data.push_back({x, "c" + std::to_string(label)});
            ref.emplace_back(x, data.back().label);
        }
        const auto model = perceptron_train(data, {4, 1, false});
        const auto expect = oracle::averaged_perceptron(ref, 4);
        CHECK(model.classes == expect.classes);
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t d = 0; d < 3; ++d)
                CHECK(model.averaged_weights[j][d] == doctest::Approx(expect.avg_w[j][d]).epsilon(1e-9));
            CHECK(model.averaged_bias[j] == doctest::Approx(expect.avg_b[j]).epsilon(1e-9));
        }
    }
    SUBCASE("shifting every score by a constant does not change predictions") {
        const std::vector<LabeledVector> data{{{1, 0}, "b"}, {{0, 1}, "a"}, {{1, 1}, "b"}, {{-1, 2}, "a"}};
        auto model = perceptron_train(data, {3, 1, false});
        auto shifted = model;
        for (auto& b : shifted.averaged_bias) b += 7.5;
        for (const auto& ex : data) CHECK(model.predict(ex.features) == shifted.predict(ex.features));
    }
    SUBCASE("a single class is rejected") {
        const std::vector<LabeledVector> data{{{1.0}, "a"}, {{2.0}, "a"}};
        CHECK_THROWS_AS(perceptron_train(data), std::invalid_argument);
    }
}

TEST_CASE("cross-lingual classification") {
    SharedSpace space(2);
    space.add_language(en, {"sport", "ball", "money", "bank"}, {1, 0, 0.9f, 0.1f, 0, 1, 0.1f, 0.9f});
    space.add_language(fr, {"sportif", "balle", "argent", "banque"}, {1, 0, 0.9f, 0.1f, 0, 1, 0.1f, 0.9f});
    const std::vector<LabeledDocument> train_docs{
        {"S", {"sport", "ball"}, en}, {"M", {"money", "bank"}, en}, {"S", {"ball", "ball", "sport"}, en},
        {"M", {"bank"}, en}, {"M", {"unknown"}, en}};
    SUBCASE("translated documents are classified") {
        const std::vector<LabeledDocument> test_docs{{"S", {"balle", "sportif"}, fr}, {"M", {"argent"}, fr},
                                                     {"M", {"banque", "argent"}, fr}, {"S", {"balle"}, fr}};
        const auto r = classify_crosslingual(space, train_docs, test_docs, {10, 1, true});
        CHECK(r.accuracy == 1.0);
        CHECK(r.total == 4);
        CHECK(r.skipped_train == 1);
        CHECK(r.test_idf_source == "test-documents");
    }
    SUBCASE("skipped test documents count as errors") {
        const std::vector<LabeledDocument> test_docs{{"S", {"balle"}, fr}, {"M", {"argent"}, fr},
                                                     {"M", {"inconnu"}, fr}, {"S", {"sportif"}, fr}};
        const auto r = classify_crosslingual(space, train_docs, test_docs, {10, 1, true});
        CHECK(r.skipped_test == 1);
        CHECK(r.accuracy == doctest::Approx(0.75));
    }
    SUBCASE("identical documents on both sides") {
        const auto r = classify_crosslingual(space, train_docs, train_docs, {10, 1, true});
        CHECK(r.correct == 4);
        CHECK(r.skipped_test == 1);
    }
}

TEST_CASE("labeled document loader") {
    TempDir dir;
    write_lines(dir / "d.tsv", {"CCAT\tThe Market rose", "", "ECAT\t"});
    const auto docs = load_labeled_documents(dir / "d.tsv", fr);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].label == "CCAT");
    CHECK(docs[0].tokens == std::vector<std::string>{"the", "market", "rose"});
    CHECK(docs[0].language == fr);
    CHECK(docs[1].tokens.empty());

    write_lines(dir / "bad.tsv", {"no label here"});
    CHECK_THROWS_AS(load_labeled_documents(dir / "bad.tsv", fr), std::invalid_argument);
}

TEST_CASE("shared space from a prefixed table") {
    EmbeddingTable table;
    table.dim = 2;
    table.words = {"en:a", "fr:b", "en:c"};
    table.values = {1, 0, 0, 1, 3, 4};
    const auto space = SharedSpace::from_table(table);
    CHECK(space.languages() == std::vector<LanguageId>{en, fr});
    CHECK(space.at(en).size() == 2);
    CHECK(space.vector_of(tw(en, "c"))[1] == 4.0f);
    CHECK(space.at(en).norms[1] == doctest::Approx(5.0));
    CHECK(space.contains(tw(fr, "b")));
    CHECK_FALSE(space.contains(tw(fr, "a")));
    CHECK_THROWS_AS(space.vector_of(tw(fr, "a")), UnknownWordError);

    EmbeddingTable bare;
    bare.dim = 1;
    bare.words = {"noprefix"};
    bare.values = {1};
    CHECK_THROWS(SharedSpace::from_table(bare));
}
