#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <thread>

#include "bundlegen/embeddings.hpp"
#include "bundlegen/rng.hpp"

namespace bundlegen {

namespace {

double sigmoid(double x) {
    if (x > 40.0) return 1.0;
    if (x < -40.0) return 0.0;
    return 1.0 / (1.0 + std::exp(-x));
}

double log_sigmoid(double x) {
    // -log(1+exp(-x)) computed stably.
    if (x > 0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

struct Corpus {
    std::vector<std::string> tokens;              // index -> token
    std::vector<std::vector<std::int32_t>> sentences;
    std::vector<double> neg_cumulative;           // unigram^0.75, cumulative
    std::size_t total_pairs = 0;
};

Corpus build_corpus(const std::vector<std::vector<std::string>>& sentences,
                    std::size_t window) {
    Corpus corpus;
    std::map<std::string, std::int64_t> counts;
    for (const auto& sentence : sentences) {
        if (sentence.size() < 2) continue;  // carries no skip-gram pair
        for (const auto& token : sentence) counts[token] += 1;
    }
    std::map<std::string, std::int32_t> index;
    corpus.tokens.reserve(counts.size());
    for (const auto& [token, n] : counts) {
        index[token] = static_cast<std::int32_t>(corpus.tokens.size());
        corpus.tokens.push_back(token);
    }
    for (const auto& sentence : sentences) {
        if (sentence.size() < 2) continue;
        std::vector<std::int32_t> ids;
        ids.reserve(sentence.size());
        for (const auto& token : sentence) ids.push_back(index.at(token));
        const std::size_t n = ids.size();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t lo = i > window ? i - window : 0;
            const std::size_t hi = std::min(n - 1, i + window);
            corpus.total_pairs += hi - lo;  // excludes the center itself
        }
        corpus.sentences.push_back(std::move(ids));
    }
    corpus.neg_cumulative.reserve(corpus.tokens.size());
    double acc = 0.0;
    for (const auto& token : corpus.tokens) {
        acc += std::pow(static_cast<double>(counts.at(token)), 0.75);
        corpus.neg_cumulative.push_back(acc);
    }
    return corpus;
}

std::int32_t sample_negative(const std::vector<double>& cumulative, Rng& rng) {
    const double x = rng.uniform_real(0.0, cumulative.back());
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    const auto idx = static_cast<std::size_t>(it - cumulative.begin());
    return static_cast<std::int32_t>(std::min(idx, cumulative.size() - 1));
}

struct EpochTally {
    double loss = 0.0;
    std::size_t pairs = 0;
};

}  // namespace

WordVectorTable train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                               const EmbeddingConfig& config,
                               unsigned threads,
                               SkipgramStats* stats) {
    if (config.dimension == 0) throw ValidationError("skipgram: dimension must be positive");
    if (config.window == 0) throw ValidationError("skipgram: window must be positive");
    Corpus corpus = build_corpus(sentences, config.window);
    const std::size_t vocab = corpus.tokens.size();
    const std::size_t dim = config.dimension;

    WordVectorTable table;
    table.dimension = dim;
    if (stats) {
        stats->epoch_loss.clear();
        stats->pairs_per_epoch = corpus.total_pairs;
        stats->vocabulary = vocab;
    }
    if (vocab == 0 || corpus.total_pairs == 0)
        throw ValidationError("skipgram: corpus has no sentence with at least two tokens");

    std::vector<double> in(vocab * dim);
    std::vector<double> out(vocab * dim, 0.0);
    {
        Rng init = Rng(config.seed).substream("skipgram-init");
        const double half = 0.5 / static_cast<double>(dim);
        for (auto& w : in) w = init.uniform_real(-half, half);
    }

    const std::size_t total_updates = corpus.total_pairs * std::max<std::size_t>(config.epochs, 1);
    std::atomic<std::size_t> pairs_done{0};
    const double lr0 = config.learning_rate;

    auto train_range = [&](std::size_t first, std::size_t last, Rng rng, EpochTally& tally) {
        std::vector<double> grad(dim);
        for (std::size_t s = first; s < last; ++s) {
            const auto& ids = corpus.sentences[s];
            const std::size_t n = ids.size();
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t lo = i > config.window ? i - config.window : 0;
                const std::size_t hi = std::min(n - 1, i + config.window);
                const std::int32_t center = ids[i];
                double* v = in.data() + static_cast<std::size_t>(center) * dim;
                for (std::size_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    const std::size_t done = pairs_done.fetch_add(1, std::memory_order_relaxed);
                    const double progress =
                        static_cast<double>(done) / static_cast<double>(total_updates);
                    const double lr = lr0 * std::max(1e-4, 1.0 - progress);
                    std::fill(grad.begin(), grad.end(), 0.0);
                    double pair_loss = 0.0;
                    for (std::size_t k = 0; k <= config.negatives; ++k) {
                        std::int32_t target;
                        double label;
                        if (k == 0) {
                            target = ids[j];
                            label = 1.0;
                        } else {
                            target = sample_negative(corpus.neg_cumulative, rng);
                            if (target == ids[j]) continue;
                            label = 0.0;
                        }
                        double* u = out.data() + static_cast<std::size_t>(target) * dim;
                        double score = 0.0;
                        for (std::size_t d = 0; d < dim; ++d) score += u[d] * v[d];
                        const double g = (label - sigmoid(score)) * lr;
                        pair_loss -= label > 0.5 ? log_sigmoid(score) : log_sigmoid(-score);
                        for (std::size_t d = 0; d < dim; ++d) {
                            grad[d] += g * u[d];
                            u[d] += g * v[d];
                        }
                    }
                    for (std::size_t d = 0; d < dim; ++d) v[d] += grad[d];
                    tally.loss += pair_loss;
                    tally.pairs += 1;
                }
            }
        }
    };

    const unsigned worker_count =
        std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(corpus.sentences.size())));
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<EpochTally> tallies(worker_count);
        if (worker_count == 1) {
            Rng rng = Rng(config.seed).substream("skipgram-epoch").substream(epoch);
            train_range(0, corpus.sentences.size(), rng, tallies[0]);
        } else {
            // Hogwild-style lock-free updates: fast, only reproducible with
            // a single worker.
            std::vector<std::thread> workers;
            const std::size_t per =
                (corpus.sentences.size() + worker_count - 1) / worker_count;
            for (unsigned t = 0; t < worker_count; ++t) {
                const std::size_t first = std::min(corpus.sentences.size(), t * per);
                const std::size_t last = std::min(corpus.sentences.size(), first + per);
                Rng rng = Rng(config.seed).substream("skipgram-epoch").substream(epoch * 9973 + t);
                workers.emplace_back([&train_range, first, last, rng, &tallies, t]() {
                    train_range(first, last, rng, tallies[t]);
                });
            }
            for (auto& w : workers) w.join();
        }
        if (stats) {
            double loss = 0.0;
            std::size_t pairs = 0;
            for (const auto& tally : tallies) {
                loss += tally.loss;
                pairs += tally.pairs;
            }
            stats->epoch_loss.push_back(pairs > 0 ? loss / static_cast<double>(pairs) : 0.0);
        }
    }

    for (std::size_t w = 0; w < vocab; ++w) {
        Vec row(in.begin() + static_cast<std::ptrdiff_t>(w * dim),
                in.begin() + static_cast<std::ptrdiff_t>((w + 1) * dim));
        table.vectors.emplace(corpus.tokens[w], std::move(row));
    }
    return table;
}

}  // namespace bundlegen
