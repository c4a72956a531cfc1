#include <algorithm>
#include <cmath>

#include "bundlegen/generator.hpp"

namespace bundlegen {

std::string to_string(StrategyKind s) {
    switch (s) {
        case StrategyKind::Add: return "Add";
        case StrategyKind::Replace: return "Replace";
        case StrategyKind::Delete: return "Delete";
        case StrategyKind::Seed: return "Seed";
    }
    return "Replace";
}

StrategyKind parse_strategy(const std::string& s) {
    if (s == "Add" || s == "add") return StrategyKind::Add;
    if (s == "Replace" || s == "replace") return StrategyKind::Replace;
    if (s == "Delete" || s == "delete") return StrategyKind::Delete;
    if (s == "Seed" || s == "seed") return StrategyKind::Seed;
    throw ValidationError("unknown strategy \"" + s + "\"");
}

std::string to_string(CandidatePool p) {
    return p == CandidatePool::AllGames ? "all_games" : "same_cluster";
}

CandidatePool parse_pool(const std::string& s) {
    if (s == "all_games") return CandidatePool::AllGames;
    if (s == "same_cluster") return CandidatePool::SameCluster;
    throw ValidationError("unknown candidate pool \"" + s + "\"");
}

std::string to_string(ScoringMode m) {
    return m == ScoringMode::Category ? "category" : "value";
}

ScoringMode parse_scoring_mode(const std::string& s) {
    if (s == "category") return ScoringMode::Category;
    if (s == "value") return ScoringMode::Value;
    throw ValidationError("unknown scoring mode \"" + s + "\"");
}

ScoringContext::ScoringContext(const Catalog& catalog, const EmbeddingMatrix& matrix,
                               const ReducedEmbedding& reduced, const ModelSet& models)
    : catalog_(&catalog),
      matrix_(&matrix),
      reduced_(&reduced),
      models_(&models),
      builder_(catalog, reduced) {}

bool ScoringContext::covers_objective(const std::string& objective) const {
    if (objective == "aggregate") {
        if (!models_->has_aggregate) return false;
        for (Metric m : kAllMetrics)
            if (!models_->covers(m)) return false;
        return true;
    }
    return models_->per_metric.count(objective) > 0;
}

namespace {

const MetricModels& models_for(const ModelSet& set, const std::string& objective) {
    const auto it = set.per_metric.find(objective);
    if (it == set.per_metric.end())
        throw ValidationError("no trained model for objective \"" + objective + "\"");
    return it->second;
}

}  // namespace

double ScoringContext::score(const Bundle& bundle, const std::string& objective,
                             ScoringMode mode) const {
    if (objective == "aggregate") {
        if (!models_->has_aggregate)
            throw ValidationError("model set was not trained for the aggregate objective");
        // The category sum is already fine-grained, so the aggregate
        // objective always climbs it regardless of the configured mode.
        int sum = 0;
        for (Metric m : kAllMetrics) {
            const MetricModels& mm = models_for(*models_, metric_name(m));
            const FeatureVector fv = builder_.build(bundle, m);
            sum += static_cast<int>(predict_category(mm.classifier, fv).category);
        }
        return static_cast<double>(sum);
    }
    const Metric m = parse_metric(objective);
    const MetricModels& mm = models_for(*models_, objective);
    const FeatureVector fv = builder_.build(bundle, m);
    if (mode == ScoringMode::Category)
        return static_cast<double>(static_cast<int>(predict_category(mm.classifier, fv).category));
    const double raw = predict_value(mm.regressor, fv);
    return higher_is_better(m) ? raw : -raw;
}

int ScoringContext::category(const Bundle& bundle, const std::string& objective,
                             ScoringMode mode) const {
    if (objective == "aggregate") {
        const double sum = score(bundle, objective, mode);
        return static_cast<int>(categorize_value(sum, models_->aggregate_cutoffs));
    }
    const Metric m = parse_metric(objective);
    const MetricModels& mm = models_for(*models_, objective);
    if (mode == ScoringMode::Category) {
        const FeatureVector fv = builder_.build(bundle, m);
        return static_cast<int>(predict_category(mm.classifier, fv).category);
    }
    // Value mode: the oriented prediction judged against the population
    // cutoffs (which were fitted on oriented values).
    return static_cast<int>(categorize_value(score(bundle, objective, mode), mm.cutoffs));
}

std::string sample_candidate_game(const Vec& centroid, const std::vector<std::string>& pool,
                                  const EmbeddingMatrix& matrix, double tau, Rng& rng,
                                  const std::set<std::string>& exclude) {
    if (tau <= 0.0) throw ValidationError("sampler: temperature must be positive");
    std::vector<std::string> eligible;
    eligible.reserve(pool.size());
    for (const auto& id : pool) {
        if (exclude.count(id)) continue;
        if (!matrix.embeddable(id)) continue;
        eligible.push_back(id);
    }
    if (eligible.empty()) throw ValidationError("sampler: no eligible candidate game");
    std::sort(eligible.begin(), eligible.end());

    std::vector<double> similarity(eligible.size());
    double max_sim = -2.0;
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        similarity[i] = cosine(centroid, matrix.rows.at(eligible[i]));
        max_sim = std::max(max_sim, similarity[i]);
    }
    std::vector<double> cumulative(eligible.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < eligible.size(); ++i) {
        acc += std::exp((similarity[i] - max_sim) / tau);
        cumulative[i] = acc;
    }
    const double x = rng.uniform_real(0.0, acc);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    const auto idx = static_cast<std::size_t>(it - cumulative.begin());
    return eligible[std::min(idx, eligible.size() - 1)];
}

std::vector<std::string> build_candidate_pool(const ScoringContext& ctx, const Bundle& bundle,
                                              CandidatePool pool) {
    std::vector<std::string> out;
    const Catalog& catalog = ctx.catalog();
    if (pool == CandidatePool::AllGames) {
        for (const auto& [id, game] : catalog.games)
            if (ctx.matrix().embeddable(id)) out.push_back(id);
        return out;
    }
    std::set<std::string> genres;
    for (const auto& member : bundle.item_ids) {
        const auto it = catalog.games.find(member);
        if (it == catalog.games.end()) continue;
        genres.insert(it->second.genres.begin(), it->second.genres.end());
    }
    for (const auto& [id, game] : catalog.games) {
        if (!ctx.matrix().embeddable(id)) continue;
        const bool overlaps = std::any_of(game.genres.begin(), game.genres.end(),
                                          [&](const std::string& g) { return genres.count(g); });
        if (overlaps) out.push_back(id);
    }
    return out;
}

namespace {

constexpr double kValueEps = 1e-9;

MoveLog skipped(std::size_t iteration, const std::string& move, int category, double score,
                std::string note) {
    MoveLog log;
    log.iteration = iteration;
    log.move = move;
    log.category_before = category;
    log.category_after = category;
    log.score_before = score;
    log.score_after = score;
    log.accepted = false;
    log.note = std::move(note);
    return log;
}

}  // namespace

std::pair<Bundle, MoveLog> apply_move(const Bundle& bundle, const OptimizationConfig& config,
                                      const ScoringContext& ctx, Rng& rng,
                                      std::size_t iteration) {
    const double score_before = ctx.score(bundle, config.objective, config.mode);
    const int category_before = ctx.category(bundle, config.objective, config.mode);
    const std::size_t size = bundle.item_ids.size();
    const std::set<std::string> members(bundle.item_ids.begin(), bundle.item_ids.end());

    Bundle candidate = bundle;
    MoveLog log;
    log.iteration = iteration;
    log.category_before = category_before;
    log.score_before = score_before;

    switch (config.strategy) {
        case StrategyKind::Add: {
            log.move = "add";
            if (size + 1 > config.max_size)
                return {bundle, skipped(iteration, "add", category_before, score_before,
                                        "at max size")};
            Vec centroid;
            try {
                centroid = bundle_centroid(bundle, ctx.matrix());
            } catch (const ValidationError&) {
                return {bundle, skipped(iteration, "add", category_before, score_before,
                                        "no embeddable members for centroid")};
            }
            const auto pool = build_candidate_pool(ctx, bundle, config.pool);
            std::string added;
            try {
                added = sample_candidate_game(centroid, pool, ctx.matrix(), config.temperature,
                                              rng, members);
            } catch (const ValidationError&) {
                return {bundle, skipped(iteration, "add", category_before, score_before,
                                        "candidate pool exhausted")};
            }
            candidate.item_ids.push_back(added);
            log.game_added = added;
            break;
        }
        case StrategyKind::Delete: {
            log.move = "delete";
            if (size <= config.min_size)
                return {bundle, skipped(iteration, "delete", category_before, score_before,
                                        "at min size")};
            if (!rng.bernoulli(config.removal_prob))
                return {bundle, skipped(iteration, "delete", category_before, score_before,
                                        "removal coin failed")};
            const std::size_t victim = rng.uniform_index(size);
            log.game_removed = candidate.item_ids[victim];
            candidate.item_ids.erase(candidate.item_ids.begin() +
                                     static_cast<std::ptrdiff_t>(victim));
            break;
        }
        case StrategyKind::Replace:
        case StrategyKind::Seed: {  // Seed optimizes with exchange moves
            log.move = "replace";
            if (size < config.min_size || size > config.max_size)
                return {bundle, skipped(iteration, "replace", category_before, score_before,
                                        "size outside limits")};
            if (!rng.bernoulli(config.removal_prob))
                return {bundle, skipped(iteration, "replace", category_before, score_before,
                                        "removal coin failed")};
            const std::size_t victim = rng.uniform_index(size);
            const std::string removed = candidate.item_ids[victim];
            candidate.item_ids.erase(candidate.item_ids.begin() +
                                     static_cast<std::ptrdiff_t>(victim));
            Vec centroid;
            try {
                centroid = bundle_centroid(candidate, ctx.matrix());
            } catch (const ValidationError&) {
                // The removal stripped the last embedded member; sample around
                // the original bundle's centroid instead.
                try {
                    centroid = bundle_centroid(bundle, ctx.matrix());
                } catch (const ValidationError&) {
                    return {bundle, skipped(iteration, "replace", category_before, score_before,
                                            "no embeddable members for centroid")};
                }
            }
            const auto pool = build_candidate_pool(ctx, candidate, config.pool);
            std::set<std::string> exclude = members;  // never re-add the removed game
            std::string added;
            try {
                added = sample_candidate_game(centroid, pool, ctx.matrix(), config.temperature,
                                              rng, exclude);
            } catch (const ValidationError&) {
                return {bundle, skipped(iteration, "replace", category_before, score_before,
                                        "candidate pool exhausted")};
            }
            candidate.item_ids.push_back(added);
            log.game_removed = removed;
            log.game_added = added;
            break;
        }
    }

    double score_after = 0.0;
    int category_after = 0;
    try {
        score_after = ctx.score(candidate, config.objective, config.mode);
        category_after = ctx.category(candidate, config.objective, config.mode);
    } catch (const ValidationError&) {
        MoveLog rejected = log;
        rejected.category_after = category_before;
        rejected.score_after = score_before;
        rejected.note = "candidate not scorable";
        return {bundle, rejected};
    }
    log.score_after = score_after;
    log.category_after = category_after;

    const bool improved = config.mode == ScoringMode::Value && config.objective != "aggregate"
                              ? score_after > score_before + kValueEps
                              : score_after > score_before;
    log.accepted = improved;
    if (!improved) {
        log.note = "no improvement";
        log.category_after = category_before;
        return {bundle, log};
    }
    return {std::move(candidate), log};
}

OptimizeResult optimize_bundle(const Bundle& bundle, const OptimizationConfig& config,
                               const ScoringContext& ctx) {
    if (config.min_size > config.max_size)
        throw ValidationError("optimize: min_size exceeds max_size");
    if (!ctx.covers_objective(config.objective))
        throw ValidationError("no trained model for objective \"" + config.objective + "\"");
    OptimizeResult result;
    result.bundle = bundle;
    Rng rng = Rng(config.seed).substream("optimize");
    for (std::size_t iter = 0; iter < config.max_iters; ++iter) {
        if (ctx.category(result.bundle, config.objective, config.mode) == 3) break;
        auto [next, log] = apply_move(result.bundle, config, ctx, rng, iter);
        result.log.push_back(log);
        if (log.accepted) result.bundle = std::move(next);
    }
    return result;
}

Bundle generate_from_seed(const std::string& seed_game, std::size_t target_size,
                          const OptimizationConfig& config, const ScoringContext& ctx,
                          const std::set<std::string>& taken_ids) {
    const Catalog& catalog = ctx.catalog();
    if (!catalog.games.count(seed_game))
        throw ValidationError("seed game \"" + seed_game + "\" is not in the catalog");
    if (!ctx.matrix().embeddable(seed_game))
        throw ValidationError("seed game \"" + seed_game + "\" has no embedding");
    if (target_size < config.min_size)
        throw ValidationError("target size below the minimum bundle size");
    if (target_size > config.max_size)
        throw ValidationError("target size above the maximum bundle size");

    Bundle bundle;
    std::string id = "gen-" + seed_game;
    for (std::size_t n = 2; catalog.bundles.count(id) || taken_ids.count(id); ++n)
        id = "gen-" + seed_game + "-" + std::to_string(n);
    bundle.bundle_id = id;
    bundle.name = "generated from " + seed_game;
    bundle.item_ids.push_back(seed_game);

    Rng rng = Rng(config.seed).substream("seed-grow");
    while (bundle.item_ids.size() < target_size) {
        const Vec centroid = bundle_centroid(bundle, ctx.matrix());
        const auto pool = build_candidate_pool(ctx, bundle, config.pool);
        const std::set<std::string> members(bundle.item_ids.begin(), bundle.item_ids.end());
        std::string added;
        try {
            added = sample_candidate_game(centroid, pool, ctx.matrix(), config.temperature, rng,
                                          members);
        } catch (const ValidationError&) {
            throw ValidationError("seed bundle \"" + id +
                                  "\": candidate pool exhausted before target size");
        }
        bundle.item_ids.push_back(added);
    }

    // Catalog-median discount prices the new bundle.
    std::vector<double> discounts;
    discounts.reserve(catalog.bundles.size());
    for (const auto& [bid, b] : catalog.bundles) discounts.push_back(b.discount_pct);
    double discount = 0.0;
    if (!discounts.empty()) {
        std::sort(discounts.begin(), discounts.end());
        const std::size_t n = discounts.size();
        discount = n % 2 == 1 ? discounts[n / 2]
                              : 0.5 * (discounts[n / 2 - 1] + discounts[n / 2]);
    }
    bundle.discount_pct = discount;
    double price_sum = 0.0;
    for (const auto& gid : bundle.item_ids) price_sum += catalog.games.at(gid).price;
    bundle.price = price_sum * (1.0 - discount / 100.0);

    OptimizationConfig opt = config;
    opt.strategy = StrategyKind::Replace;
    OptimizeResult result = optimize_bundle(bundle, opt, ctx);
    result.bundle.price = bundle.price;  // membership moves keep the seed pricing
    result.bundle.discount_pct = bundle.discount_pct;
    return result.bundle;
}

Category aggregate_category(const std::array<Category, 5>& labels,
                            const PercentileCutoffs& cutoffs) {
    int sum = 0;
    for (Category c : labels) sum += static_cast<int>(c);
    return categorize_value(static_cast<double>(sum), cutoffs);
}

}  // namespace bundlegen
