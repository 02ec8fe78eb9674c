#include "transgram/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <set>
#include <thread>

namespace transgram {

// ---------------------------------------------------------------------------
// Logistic helpers

SigmoidTable::SigmoidTable() {
    for (std::size_t i = 0; i < kSize; ++i) {
        const double x = -kSigmoidClamp + (static_cast<double>(i) + 0.5) * (2.0 * kSigmoidClamp / kSize);
        prob_[i] = static_cast<float>(1.0 / (1.0 + std::exp(-x)));
        neg_log_[i] = static_cast<float>(std::log1p(std::exp(-x)));
    }
}

const SigmoidTable& SigmoidTable::instance() {
    static const SigmoidTable table;
    return table;
}

namespace {

template <typename Real>
double pair_loss_impl(std::span<const Real> w, std::span<const Real> c, std::span<const std::span<const Real>> negs) {
    const auto dot = [&](std::span<const Real> x) {
        if (x.size() != w.size()) throw std::invalid_argument("pair_loss: dimension mismatch");
        double s = 0.0;
        for (std::size_t d = 0; d < w.size(); ++d) s += static_cast<double>(w[d]) * static_cast<double>(x[d]);
        return s;
    };
    const ExactSigmoid sigmoid;
    double loss = sigmoid.neg_log(dot(c));
    for (const auto& n : negs) loss += sigmoid.neg_log(-dot(n));
    return loss;
}

}  // namespace

double pair_loss(std::span<const float> w, std::span<const float> c, std::span<const std::span<const float>> negs) {
    return pair_loss_impl<float>(w, c, negs);
}

double pair_loss(std::span<const double> w, std::span<const double> c,
                 std::span<const std::span<const double>> negs) {
    return pair_loss_impl<double>(w, c, negs);
}

double lr_at(double progress, const TrainingConfig& cfg) {
    progress = std::clamp(progress, 0.0, 1.0);
    return std::max(cfg.lr_min, cfg.lr_start * (1.0 - progress));
}

// ---------------------------------------------------------------------------
// Objectives

StepContext::StepContext(std::uint64_t seed, std::size_t dim, SigmoidMode mode)
    : rng_(seed), mode_(mode), scratch_(dim, 0.0f) {}

struct StepKernels {
    // Positive row followed by sampled negatives, excluding `positive`.
    static void gather_rows(StepContext& ctx, EmbeddingSet& ctx_embeds, const Vocabulary& vocab, WordIndex positive,
                            std::size_t negatives) {
        ctx.rows_.clear();
        ctx.rows_.push_back(ctx_embeds.context_row(positive).data());
        if (vocab.size() < 2) return;
        for (std::size_t k = 0; k < negatives; ++k) {
            const WordIndex neg = sample_negative(vocab, ctx.rng_, positive);
            ctx.rows_.push_back(ctx_embeds.context_row(neg).data());
        }
    }

    static void step(StepContext& ctx, std::span<float> target, float lr) {
        float loss = 0.0f;
        if (ctx.mode_ == SigmoidMode::table) {
            loss = pair_step<float>(target, ctx.rows_, lr, ctx.scratch_, SigmoidTable::instance());
        } else {
            loss = pair_step<float>(target, ctx.rows_, lr, ctx.scratch_, ExactSigmoid{});
        }
        ctx.loss_sum += loss;
        ++ctx.pair_count;
    }

    static void skipgram(std::span<const WordIndex> sentence, EmbeddingSet& embeds, const Vocabulary& vocab,
                         const TrainingConfig& cfg, float lr, StepContext& ctx) {
        if (ctx.scratch_.size() < embeds.dim()) ctx.scratch_.resize(embeds.dim());
        std::uniform_real_distribution<double> coin(0.0, 1.0);
        auto& kept = ctx.kept_;
        kept.clear();
        for (WordIndex w : sentence) {
            const double discard = vocab.discard_probability(w);
            if (discard > 0.0 && coin(ctx.rng_) < discard) continue;
            kept.push_back(w);
        }
        const std::size_t n = kept.size();
        if (n < 2) return;
        std::uniform_int_distribution<std::size_t> radius_dist(1, cfg.window);
        for (std::size_t pos = 0; pos < n; ++pos) {
            const std::size_t radius = radius_dist(ctx.rng_);
            const std::size_t lo = pos >= radius ? pos - radius : 0;
            const std::size_t hi = std::min(n - 1, pos + radius);
            auto target = embeds.target_row(kept[pos]);
            for (std::size_t c = lo; c <= hi; ++c) {
                if (c == pos) continue;
                gather_rows(ctx, embeds, vocab, kept[c], cfg.negatives);
                step(ctx, target, lr);
            }
        }
    }

    static void transgram(std::span<const WordIndex> s_e, std::span<const WordIndex> s_f, EmbeddingSet& embeds_e,
                          EmbeddingSet& embeds_f, const Vocabulary& vocab_f, const TrainingConfig& cfg, float lr,
                          StepContext& ctx) {
        if (ctx.scratch_.size() < embeds_e.dim()) ctx.scratch_.resize(embeds_e.dim());
        for (WordIndex w : s_e) {
            auto target = embeds_e.target_row(w);
            for (WordIndex c : s_f) {
                gather_rows(ctx, embeds_f, vocab_f, c, cfg.negatives);
                step(ctx, target, lr);
            }
        }
    }
};

void skipgram_sentence_step(std::span<const WordIndex> sentence, EmbeddingSet& embeds, const Vocabulary& vocab,
                            const TrainingConfig& cfg, float lr, StepContext& ctx) {
    StepKernels::skipgram(sentence, embeds, vocab, cfg, lr, ctx);
}

void transgram_pair_step(std::span<const WordIndex> s_e, std::span<const WordIndex> s_f, EmbeddingSet& embeds_e,
                         EmbeddingSet& embeds_f, const Vocabulary& vocab_f, const TrainingConfig& cfg, float lr,
                         StepContext& ctx) {
    if (embeds_e.dim() != embeds_f.dim()) throw std::invalid_argument("transgram_pair_step: dimension mismatch");
    StepKernels::transgram(s_e, s_f, embeds_e, embeds_f, vocab_f, cfg, lr, ctx);
}

// ---------------------------------------------------------------------------
// Joint training

namespace {

/// Sentences as index sequences, flattened.
struct EncodedSentences {
    std::vector<WordIndex> tokens;
    std::vector<std::size_t> offsets{0};

    std::size_t size() const noexcept { return offsets.size() - 1; }
    std::span<const WordIndex> operator[](std::size_t i) const noexcept {
        return {tokens.data() + offsets[i], offsets[i + 1] - offsets[i]};
    }
};

// Drops out-of-vocabulary tokens and truncates to the length cap.
std::size_t encode_into(std::span<const std::string> words, const Vocabulary& vocab, std::size_t cap,
                        std::vector<WordIndex>& out) {
    const std::size_t before = out.size();
    for (const auto& word : words) {
        if (out.size() - before >= cap) break;
        if (const auto idx = vocab.find(word)) out.push_back(*idx);
    }
    return out.size() - before;
}

struct Objective {
    enum class Kind { mono, bitext } kind;
    LanguageId lang_e;  // mono language, or the pivot side of a bitext
    LanguageId lang_f;  // unused for mono
    EncodedSentences side_e;
    EncodedSentences side_f;

    std::size_t sentences() const noexcept { return side_e.size(); }
    std::uint64_t tokens(std::size_t i) const noexcept {
        return side_e[i].size() + (kind == Kind::bitext ? side_f[i].size() : 0);
    }
};

Objective encode_mono(const MonoCorpus& corpus, const Vocabulary& vocab, std::size_t cap) {
    Objective obj{Objective::Kind::mono, corpus.language(), {}, {}, {}};
    corpus.for_each_sentence([&](std::span<const std::string> words) {
        if (encode_into(words, vocab, cap, obj.side_e.tokens) > 0) {
            obj.side_e.offsets.push_back(obj.side_e.tokens.size());
        }
    });
    return obj;
}

Objective encode_bitext(const AlignedCorpus& corpus, const LanguageId& pivot, const MultilingualModel& model,
                        std::size_t cap, TrainProgress& progress) {
    const bool pivot_is_e = corpus.lang_e() == pivot;
    const LanguageId& other = pivot_is_e ? corpus.lang_f() : corpus.lang_e();
    const Vocabulary& vocab_p = model.at(pivot).vocab;
    const Vocabulary& vocab_o = model.at(other).vocab;
    Objective obj{Objective::Kind::bitext, pivot, other, {}, {}};
    const auto stats = corpus.for_each_pair([&](std::span<const std::string> e, std::span<const std::string> f) {
        const auto pivot_words = pivot_is_e ? e : f;
        const auto other_words = pivot_is_e ? f : e;
        const std::size_t mark_p = obj.side_e.tokens.size();
        const std::size_t mark_o = obj.side_f.tokens.size();
        const std::size_t np = encode_into(pivot_words, vocab_p, cap, obj.side_e.tokens);
        const std::size_t no = encode_into(other_words, vocab_o, cap, obj.side_f.tokens);
        if (np == 0 || no == 0) {
            obj.side_e.tokens.resize(mark_p);
            obj.side_f.tokens.resize(mark_o);
            ++progress.skipped_pairs;
            return;
        }
        obj.side_e.offsets.push_back(obj.side_e.tokens.size());
        obj.side_f.offsets.push_back(obj.side_f.tokens.size());
    });
    progress.skipped_pairs += stats.skipped;
    if (!stats.line_counts_match()) {
        progress.warnings.push_back("bitext " + corpus.describe() + " has " + std::to_string(stats.lines_e) + " vs " +
                                    std::to_string(stats.lines_f) + " lines; trailing lines ignored");
    }
    return obj;
}

void check_layout(const MultilingualModel& model, const std::vector<MonoCorpus>& monos,
                  const std::vector<AlignedCorpus>& bitexts) {
    const LanguageId& pivot = model.pivot();
    if (!model.contains(pivot)) throw TrainingError("pivot language " + pivot.code() + " is not in the model");
    for (const auto& mono : monos) {
        if (!model.contains(mono.language())) {
            throw TrainingError("monolingual corpus " + mono.describe() + " is in a language the model lacks");
        }
    }
    std::set<LanguageId> paired;
    for (const auto& bitext : bitexts) {
        const bool e_pivot = bitext.lang_e() == pivot;
        const bool f_pivot = bitext.lang_f() == pivot;
        if (!e_pivot && !f_pivot) {
            throw TrainingError("bitext " + bitext.describe() + " does not include the pivot language " + pivot.code());
        }
        const LanguageId& other = e_pivot ? bitext.lang_f() : bitext.lang_e();
        if (!model.contains(other)) {
            throw TrainingError("bitext " + bitext.describe() + " is in a language the model lacks: " + other.code());
        }
        if (!paired.insert(other).second) {
            throw TrainingError("language " + other.code() + " appears in more than one bitext");
        }
    }
    for (const auto& lang : model.languages()) {
        if (lang != pivot && !paired.contains(lang)) {
            throw TrainingError("missing bitext for language " + lang.code() + " (paired with pivot " + pivot.code() +
                                ")");
        }
    }
}

struct WorkerResult {
    std::vector<double> epoch_loss;
    std::vector<std::uint64_t> epoch_pairs;
    double ema = 0.0;
    bool ema_started = false;
};

}  // namespace

TrainProgress train(MultilingualModel& model, const std::vector<MonoCorpus>& monos,
                    const std::vector<AlignedCorpus>& bitexts, const TrainingConfig& cfg,
                    const ProgressCallback& on_progress) {
    cfg.validate();
    if (cfg.dim != model.dim()) {
        throw TrainingError("configuration dim " + std::to_string(cfg.dim) + " differs from model dim " +
                            std::to_string(model.dim()));
    }
    check_layout(model, monos, bitexts);

    TrainProgress progress;
    progress.current_lr = cfg.lr_start;
    if (cfg.epochs == 0) return progress;

    for (const auto& lang : model.languages()) {
        auto& vocab = model.at(lang).vocab;
        vocab.apply_subsampling(cfg.subsample_t);
        vocab.rebuild_sampling_table(cfg.alpha);
    }

    std::vector<Objective> objectives;
    for (const auto& mono : monos) {
        objectives.push_back(encode_mono(mono, model.at(mono.language()).vocab, cfg.max_sentence_len));
    }
    for (const auto& bitext : bitexts) {
        objectives.push_back(encode_bitext(bitext, model.pivot(), model, cfg.max_sentence_len, progress));
    }

    // Contiguous shard [begin, end) of every objective per worker.
    const std::size_t workers = cfg.threads;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> shards(workers);
    std::vector<std::vector<std::uint64_t>> shard_tokens(workers);
    std::uint64_t epoch_tokens = 0;
    for (const auto& obj : objectives) {
        const std::size_t n = obj.sentences();
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = n * w / workers;
            const std::size_t end = n * (w + 1) / workers;
            std::uint64_t tokens = 0;
            for (std::size_t i = begin; i < end; ++i) tokens += obj.tokens(i);
            shards[w].emplace_back(begin, end);
            shard_tokens[w].push_back(tokens);
            epoch_tokens += tokens;
        }
    }
    const std::uint64_t budget = epoch_tokens * cfg.epochs;
    progress.total_token_budget = budget;
    if (budget == 0) {
        progress.epoch_mean_loss.assign(cfg.epochs, 0.0);
        return progress;
    }

    std::vector<std::pair<LanguageModel*, LanguageModel*>> slots;
    for (const auto& obj : objectives) {
        slots.emplace_back(&model.at(obj.lang_e),
                           obj.kind == Objective::Kind::bitext ? &model.at(obj.lang_f) : nullptr);
    }

    std::atomic<std::uint64_t> processed{0};
    std::atomic<std::uint64_t> total_pairs{0};
    std::mutex report_mutex;
    std::vector<WorkerResult> results(workers);

    const auto run_worker = [&](std::size_t worker) {
        WorkerResult& result = results[worker];
        result.epoch_loss.assign(cfg.epochs, 0.0);
        result.epoch_pairs.assign(cfg.epochs, 0);
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(worker)};
        std::array<std::uint32_t, 2> seed_words{};
        seq.generate(seed_words.begin(), seed_words.end());
        const std::uint64_t worker_seed = (static_cast<std::uint64_t>(seed_words[0]) << 32) | seed_words[1];
        StepContext ctx(worker_seed, model.dim());
        std::uniform_real_distribution<double> pick(0.0, 1.0);

        const auto& my_shards = shards[worker];
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            std::vector<std::uint64_t> remaining = shard_tokens[worker];
            std::vector<std::size_t> cursor(objectives.size());
            for (std::size_t o = 0; o < objectives.size(); ++o) cursor[o] = my_shards[o].first;
            std::uint64_t left = 0;
            for (auto r : remaining) left += r;

            while (left > 0) {
                // Objective chosen in proportion to its remaining tokens.
                double ticket = pick(ctx.rng()) * static_cast<double>(left);
                std::size_t o = objectives.size();
                for (std::size_t k = 0; k < objectives.size(); ++k) {
                    if (remaining[k] == 0) continue;
                    o = k;
                    if (ticket < static_cast<double>(remaining[k])) break;
                    ticket -= static_cast<double>(remaining[k]);
                }

                Objective& obj = objectives[o];
                const std::size_t i = cursor[o]++;
                const std::uint64_t tokens = obj.tokens(i);
                const std::uint64_t done_before = processed.load(std::memory_order_relaxed);
                const auto lr = static_cast<float>(lr_at(static_cast<double>(done_before) / budget, cfg));

                const double loss_before = ctx.loss_sum;
                const std::uint64_t pairs_before = ctx.pair_count;
                if (obj.kind == Objective::Kind::mono) {
                    LanguageModel& lm = *slots[o].first;
                    StepKernels::skipgram(obj.side_e[i], lm.embeddings, lm.vocab, cfg, lr, ctx);
                } else {
                    LanguageModel& pivot = *slots[o].first;
                    LanguageModel& other = *slots[o].second;
                    StepKernels::transgram(obj.side_e[i], obj.side_f[i], pivot.embeddings, other.embeddings,
                                           other.vocab, cfg, lr, ctx);
                    StepKernels::transgram(obj.side_f[i], obj.side_e[i], other.embeddings, pivot.embeddings,
                                           pivot.vocab, cfg, lr, ctx);
                }
                const std::uint64_t pairs = ctx.pair_count - pairs_before;
                if (pairs > 0) {
                    const double mean = (ctx.loss_sum - loss_before) / static_cast<double>(pairs);
                    result.ema = result.ema_started ? 0.99 * result.ema + 0.01 * mean : mean;
                    result.ema_started = true;
                    result.epoch_loss[epoch] += ctx.loss_sum - loss_before;
                    result.epoch_pairs[epoch] += pairs;
                    total_pairs.fetch_add(pairs, std::memory_order_relaxed);
                }

                remaining[o] -= tokens;
                left -= tokens;
                const std::uint64_t done = processed.fetch_add(tokens, std::memory_order_relaxed) + tokens;
                if (on_progress && done / kProgressInterval != (done - tokens) / kProgressInterval) {
                    TrainProgress snapshot;
                    snapshot.tokens_processed = done;
                    snapshot.total_token_budget = budget;
                    snapshot.current_lr = lr_at(static_cast<double>(done) / budget, cfg);
                    snapshot.running_loss = result.ema;
                    snapshot.pairs = total_pairs.load(std::memory_order_relaxed);
                    std::lock_guard lock(report_mutex);
                    on_progress(snapshot);
                }
            }
        }
    };

    if (workers == 1) {
        run_worker(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
    }

    progress.tokens_processed = processed.load();
    progress.current_lr = lr_at(static_cast<double>(progress.tokens_processed) / budget, cfg);
    progress.pairs = total_pairs.load();
    progress.epoch_mean_loss.assign(cfg.epochs, 0.0);
    double ema_sum = 0.0;
    std::size_t ema_count = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss = 0.0;
        std::uint64_t pairs = 0;
        for (const auto& r : results) {
            loss += r.epoch_loss[epoch];
            pairs += r.epoch_pairs[epoch];
        }
        progress.epoch_mean_loss[epoch] = pairs > 0 ? loss / static_cast<double>(pairs) : 0.0;
    }
    for (const auto& r : results) {
        if (r.ema_started) {
            ema_sum += r.ema;
            ++ema_count;
        }
    }
    progress.running_loss = ema_count > 0 ? ema_sum / static_cast<double>(ema_count) : 0.0;

    if (!model.all_finite()) throw TrainingError("training produced non-finite embeddings; lower the learning rate");
    model.set_config_snapshot(cfg);
    return progress;
}

}  // namespace transgram
