#include <algorithm>
#include <cmath>

#include "bundlegen/metrics.hpp"

namespace bundlegen {

std::string metric_name(Metric m) {
    switch (m) {
        case Metric::Peb: return "P_eb";
        case Metric::Pmb: return "P_mb";
        case Metric::N0: return "N0";
        case Metric::PB: return "PB";
        case Metric::D: return "D";
    }
    return "P_eb";
}

Metric parse_metric(const std::string& name) {
    for (Metric m : kAllMetrics)
        if (metric_name(m) == name) return m;
    throw ValidationError("unknown metric \"" + name + "\"");
}

bool higher_is_better(Metric m) { return m != Metric::N0; }

std::string to_string(Category c) {
    switch (c) {
        case Category::Cat1: return "Cat1";
        case Category::Cat2: return "Cat2";
        case Category::Cat3: return "Cat3";
    }
    return "Cat1";
}

std::int64_t explicit_purchases(const Bundle& bundle) {
    return static_cast<std::int64_t>(bundle.purchaser_ids.size());
}

std::int64_t implicit_purchases(const Bundle& bundle, const Catalog& catalog) {
    if (bundle.item_ids.empty())
        throw ValidationError("bundle \"" + bundle.bundle_id + "\" is empty");
    const std::int64_t n = static_cast<std::int64_t>(bundle.item_ids.size());
    std::set<std::string> members(bundle.item_ids.begin(), bundle.item_ids.end());
    std::int64_t count = 0;
    for (const auto& user : catalog.large_users) {
        std::int64_t owned = 0;
        for (const auto& id : members)
            if (user.holdings.count(id)) ++owned;
        // |G_u ∩ B_b| > 0.8·|B_b|, kept exact in integers.
        if (5 * owned > 4 * n) ++count;
    }
    return count;
}

namespace {

const GameStats& stats_for(const GameStatsMap& stats, const std::string& game_id,
                           const std::string& bundle_id) {
    const auto it = stats.find(game_id);
    if (it == stats.end())
        throw ValidationError("bundle \"" + bundle_id + "\": no stats for game \"" + game_id +
                              "\"");
    return it->second;
}

}  // namespace

std::int64_t zero_playtime_count(const Bundle& bundle, const GameStatsMap& stats) {
    std::int64_t count = 0;
    for (const auto& id : bundle.item_ids)
        if (stats_for(stats, id, bundle.bundle_id).total_playtime == 0) ++count;
    return count;
}

std::int64_t total_playtime(const Bundle& bundle, const GameStatsMap& stats) {
    std::int64_t sum = 0;
    for (const auto& id : bundle.item_ids)
        sum += stats_for(stats, id, bundle.bundle_id).total_playtime;
    return sum;
}

namespace {

/// Sum of unit vectors of the embeddable members; n reported via `count`.
/// Σ_{i,j} cos(i,j) collapses to |Σ ê|², which keeps diversity O(n·dim).
Vec unit_sum(const Bundle& bundle, const EmbeddingMatrix& matrix, std::size_t& count) {
    Vec sum(matrix.dimension, 0.0);
    count = 0;
    for (const auto& id : bundle.item_ids) {
        if (!matrix.embeddable(id)) continue;
        const Vec unit = normalized(matrix.rows.at(id));
        axpy(1.0, unit, sum);
        ++count;
    }
    return sum;
}

}  // namespace

double diversity(const Bundle& bundle, const EmbeddingMatrix& matrix) {
    std::size_t n = 0;
    const Vec sum = unit_sum(bundle, matrix, n);
    if (n == 0)
        throw ValidationError("bundle \"" + bundle.bundle_id + "\": no embeddable members");
    const double nn = static_cast<double>(n) * static_cast<double>(n);
    // The algebra keeps the result in [0, 2]; clamp away rounding slop.
    return std::clamp(1.0 - dot(sum, sum) / nn, 0.0, 2.0);
}

double coverage(const std::vector<const Bundle*>& bundles, const EmbeddingMatrix& matrix) {
    if (bundles.empty()) throw ValidationError("coverage: empty bundle set");
    double similarity = 0.0;
    double weight = 0.0;
    for (const Bundle* bundle : bundles) {
        std::size_t n = 0;
        const Vec sum = unit_sum(*bundle, matrix, n);
        if (n == 0) continue;
        similarity += dot(sum, sum);
        weight += static_cast<double>(n) * static_cast<double>(n);
    }
    if (weight == 0.0) throw ValidationError("coverage: no bundle has embeddable members");
    return std::clamp(1.0 - similarity / weight, 0.0, 2.0);
}

double coverage(const Catalog& catalog, const EmbeddingMatrix& matrix) {
    std::vector<const Bundle*> bundles;
    bundles.reserve(catalog.bundles.size());
    for (const auto& [id, bundle] : catalog.bundles) bundles.push_back(&bundle);
    return coverage(bundles, matrix);
}

double metric_value(const PopularityScores& scores, Metric m) {
    switch (m) {
        case Metric::Peb: return static_cast<double>(scores.explicit_purchases);
        case Metric::Pmb: return static_cast<double>(scores.implicit_purchases);
        case Metric::N0: return static_cast<double>(scores.zero_playtime_count);
        case Metric::PB: return static_cast<double>(scores.total_playtime);
        case Metric::D: return scores.diversity;
    }
    return 0.0;
}

double oriented_value(const PopularityScores& scores, Metric m) {
    const double v = metric_value(scores, m);
    return higher_is_better(m) ? v : -v;
}

PercentileCutoffs compute_cutoffs(const std::map<std::string, double>& values,
                                  const std::string& metric, double lower_pct,
                                  double upper_pct, std::vector<std::string>* warnings) {
    if (values.empty()) throw ValidationError("cutoffs: empty value population");
    if (!(0.0 < lower_pct && lower_pct < upper_pct && upper_pct < 100.0))
        throw ValidationError("cutoffs: need 0 < lower_pct < upper_pct < 100");
    std::vector<double> sorted;
    sorted.reserve(values.size());
    for (const auto& [id, v] : values) sorted.push_back(v);
    std::sort(sorted.begin(), sorted.end());

    const auto nearest_rank = [&](double pct) {
        const double n = static_cast<double>(sorted.size());
        auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
        rank = std::clamp<std::size_t>(rank, 1, sorted.size());
        return sorted[rank - 1];
    };

    PercentileCutoffs cutoffs;
    cutoffs.metric = metric;
    cutoffs.lower_pct = lower_pct;
    cutoffs.upper_pct = upper_pct;
    cutoffs.lower_value = nearest_rank(lower_pct);
    cutoffs.upper_value = nearest_rank(upper_pct);
    cutoffs.degenerate = sorted.front() == sorted.back();
    if (cutoffs.degenerate && warnings)
        warnings->push_back("metric " + metric +
                            ": degenerate population (all values equal), everything is Cat1");
    return cutoffs;
}

Category categorize_value(double value, const PercentileCutoffs& cutoffs) {
    if (cutoffs.degenerate) return Category::Cat1;
    if (value <= cutoffs.lower_value) return Category::Cat1;
    if (value <= cutoffs.upper_value) return Category::Cat2;
    return Category::Cat3;
}

std::map<std::string, Category> categorize(const std::map<std::string, double>& values,
                                           const PercentileCutoffs& cutoffs) {
    if (values.empty()) throw ValidationError("categorize: empty value population");
    std::map<std::string, Category> labels;
    for (const auto& [id, v] : values) labels.emplace(id, categorize_value(v, cutoffs));
    return labels;
}

std::map<std::string, PopularityScores> compute_all_scores(
    const Catalog& catalog, const EmbeddingMatrix& matrix,
    std::vector<std::string>* warnings) {
    const GameStatsMap stats = compute_game_stats(catalog);
    std::map<std::string, PopularityScores> all;
    for (const auto& [id, bundle] : catalog.bundles) {
        bool embeddable = false;
        for (const auto& game_id : bundle.item_ids)
            if (matrix.embeddable(game_id)) {
                embeddable = true;
                break;
            }
        if (!embeddable) {
            if (warnings)
                warnings->push_back("bundle \"" + id +
                                    "\" skipped: no embeddable members");
            continue;
        }
        PopularityScores s;
        s.bundle_id = id;
        s.explicit_purchases = explicit_purchases(bundle);
        s.implicit_purchases = implicit_purchases(bundle, catalog);
        s.zero_playtime_count = zero_playtime_count(bundle, stats);
        s.total_playtime = total_playtime(bundle, stats);
        s.diversity = diversity(bundle, matrix);
        all.emplace(id, std::move(s));
    }
    return all;
}

}  // namespace bundlegen
