#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "transgram/config.hpp"
#include "transgram/corpus.hpp"
#include "transgram/model.hpp"

namespace transgram {

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Logistic function. Inputs are clamped to [-kSigmoidClamp, kSigmoidClamp]
// before evaluation, both for the loss and for the gradient.

inline constexpr double kSigmoidClamp = 6.0;

/// Closed-form logistic on the clamped input.
struct ExactSigmoid {
    static double clamp(double x) noexcept { return x < -kSigmoidClamp ? -kSigmoidClamp : (x > kSigmoidClamp ? kSigmoidClamp : x); }
    double prob(double x) const noexcept { return 1.0 / (1.0 + std::exp(-clamp(x))); }
    /// -log sigma(x)
    double neg_log(double x) const noexcept { return std::log1p(std::exp(-clamp(x))); }
};

/// 1024-entry lookup of sigma and -log sigma over [-6, 6], evaluated at bucket
/// centers.
class SigmoidTable {
public:
    static constexpr std::size_t kSize = 1024;

    SigmoidTable();
    static const SigmoidTable& instance();

    float prob(float x) const noexcept { return prob_[bucket(x)]; }
    float neg_log(float x) const noexcept { return neg_log_[bucket(x)]; }

private:
    static std::size_t bucket(float x) noexcept {
        constexpr auto scale = static_cast<float>(kSize / (2.0 * kSigmoidClamp));
        const float pos = (x + static_cast<float>(kSigmoidClamp)) * scale;
        if (!(pos > 0.0f)) return 0;
        const auto idx = static_cast<std::size_t>(pos);
        return idx < kSize ? idx : kSize - 1;
    }

    std::array<float, kSize> prob_{};
    std::array<float, kSize> neg_log_{};
};

/// -log sigma(w.c) - sum_k log sigma(-w.n_k), with the clamp above. Throws
/// std::invalid_argument on a dimension mismatch.
double pair_loss(std::span<const float> w, std::span<const float> c, std::span<const std::span<const float>> negatives);
double pair_loss(std::span<const double> w, std::span<const double> c,
                 std::span<const std::span<const double>> negatives);

/// One negative-sampling SGD step for a (target, context) pair.
///
/// `contexts[0]` is the positive context row (label 1); the rest are negative
/// context rows (label 0). With g = lr * (label - sigma(w.x)) each context row
/// receives x += g * w and the target receives w += sum g * x, all computed
/// from the pre-step target. `scratch` must hold at least `target.size()`
/// values. Returns the pair loss before the update.
template <typename Real, typename Sigmoid>
Real pair_step(std::span<Real> target, std::span<Real* const> contexts, Real lr, std::span<Real> scratch,
               const Sigmoid& sigmoid) {
    const std::size_t dim = target.size();
    Real* const w = target.data();
    Real* const acc = scratch.data();
    for (std::size_t d = 0; d < dim; ++d) acc[d] = Real(0);

    Real loss = 0;
    for (std::size_t k = 0; k < contexts.size(); ++k) {
        Real* const x = contexts[k];
        Real dot = 0;
        for (std::size_t d = 0; d < dim; ++d) dot += w[d] * x[d];
        const Real label = k == 0 ? Real(1) : Real(0);
        loss += static_cast<Real>(k == 0 ? sigmoid.neg_log(dot) : sigmoid.neg_log(-dot));
        const Real g = lr * (label - static_cast<Real>(sigmoid.prob(dot)));
        for (std::size_t d = 0; d < dim; ++d) acc[d] += g * x[d];
        for (std::size_t d = 0; d < dim; ++d) x[d] += g * w[d];
    }
    for (std::size_t d = 0; d < dim; ++d) w[d] += acc[d];
    return loss;
}

/// max(lr_min, lr_start * (1 - progress)), progress clamped to [0, 1].
double lr_at(double progress, const TrainingConfig& cfg);

// ---------------------------------------------------------------------------
// Per-sentence objectives

enum class SigmoidMode { table, exact };

/// Mutable per-worker state: random generator, scratch buffers and loss
/// accounting. One per thread.
class StepContext {
public:
    StepContext(std::uint64_t seed, std::size_t dim, SigmoidMode mode = SigmoidMode::table);

    Rng& rng() noexcept { return rng_; }
    SigmoidMode sigmoid_mode() const noexcept { return mode_; }

    double loss_sum = 0.0;
    std::uint64_t pair_count = 0;

private:
    friend struct StepKernels;

    Rng rng_;
    SigmoidMode mode_;
    std::vector<float> scratch_;
    std::vector<float*> rows_;
    std::vector<WordIndex> kept_;
};

/// Skip-gram over one sentence of language lambda: frequent words are
/// subsampled away (both as centers and as contexts) using the vocabulary's
/// discard probabilities, the window radius is drawn uniformly from
/// [1, cfg.window] per center, and every (center, context) pair takes a
/// pair_step of target(center) against context(context) plus cfg.negatives
/// rows drawn from the same vocabulary excluding the context word.
void skipgram_sentence_step(std::span<const WordIndex> sentence, EmbeddingSet& embeds, const Vocabulary& vocab,
                            const TrainingConfig& cfg, float lr, StepContext& ctx);

/// Cross-lingual objective in direction e -> f: every word of s_e is paired
/// with every word of s_f, stepping target_e(w) against context_f(c) plus
/// cfg.negatives rows drawn from vocab_f excluding c. No subsampling.
void transgram_pair_step(std::span<const WordIndex> s_e, std::span<const WordIndex> s_f, EmbeddingSet& embeds_e,
                         EmbeddingSet& embeds_f, const Vocabulary& vocab_f, const TrainingConfig& cfg, float lr,
                         StepContext& ctx);

// ---------------------------------------------------------------------------
// Joint training

struct TrainProgress {
    std::uint64_t tokens_processed = 0;
    std::uint64_t total_token_budget = 0;
    double current_lr = 0.0;
    double running_loss = 0.0;  // exponential moving average of pair losses
    std::vector<double> epoch_mean_loss;
    std::uint64_t pairs = 0;
    std::size_t skipped_pairs = 0;  // bitext pairs dropped for an empty side
    std::vector<std::string> warnings;
};

using ProgressCallback = std::function<void(const TrainProgress&)>;

/// Called each time tokens_processed crosses a multiple of this.
inline constexpr std::uint64_t kProgressInterval = 100000;

/// Minimizes sum_lambda J_lambda + sum_{lambda != pivot} (Omega_{pivot,lambda} +
/// Omega_{lambda,pivot}) by asynchronous SGD over cfg.threads workers.
///
/// Every non-pivot language of the model must appear in exactly one bitext,
/// paired with the pivot. Each worker owns a contiguous shard of every
/// corpus; per epoch it repeatedly picks an objective with probability
/// proportional to the shard tokens that objective has left, then trains one
/// monolingual sentence or one sentence pair in both directions. The learning
/// rate follows lr_at() over a token counter shared by all workers. Workers
/// update the shared matrices without locking.
///
/// The model's vocabularies get their subsampling and sampling tables rebuilt
/// from cfg before training starts.
TrainProgress train(MultilingualModel& model, const std::vector<MonoCorpus>& monos,
                    const std::vector<AlignedCorpus>& bitexts, const TrainingConfig& cfg,
                    const ProgressCallback& on_progress = {});

}  // namespace transgram
