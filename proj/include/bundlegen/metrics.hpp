#ifndef BUNDLEGEN_METRICS_HPP
#define BUNDLEGEN_METRICS_HPP

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bundlegen/catalog.hpp"
#include "bundlegen/embeddings.hpp"
#include "bundlegen/types.hpp"

namespace bundlegen {

/// The five per-bundle popularity metrics. Coverage is catalog-level and
/// handled separately.
enum class Metric { Peb, Pmb, N0, PB, D };

inline constexpr std::array<Metric, 5> kAllMetrics = {
    Metric::Peb, Metric::Pmb, Metric::N0, Metric::PB, Metric::D};

std::string metric_name(Metric m);  // "P_eb", "P_mb", "N0", "PB", "D"
Metric parse_metric(const std::string& name);

/// N0 counts unplayed members, so smaller is better; every other metric
/// grows with popularity.
bool higher_is_better(Metric m);

struct PopularityScores {
    std::string bundle_id;
    std::int64_t explicit_purchases = 0;
    std::int64_t implicit_purchases = 0;
    std::int64_t zero_playtime_count = 0;
    std::int64_t total_playtime = 0;
    double diversity = 0.0;
};

enum class Category : int { Cat1 = 1, Cat2 = 2, Cat3 = 3 };

std::string to_string(Category c);

struct PercentileCutoffs {
    std::string metric;
    double lower_pct = 60.0;
    double upper_pct = 80.0;
    double lower_value = 0.0;
    double upper_value = 0.0;
    bool degenerate = false;  // all training values equal
};

std::int64_t explicit_purchases(const Bundle& bundle);

/// Large users owning strictly more than 80% of the bundle's games,
/// evaluated exactly as 5*owned > 4*|bundle|.
std::int64_t implicit_purchases(const Bundle& bundle, const Catalog& catalog);

std::int64_t zero_playtime_count(const Bundle& bundle, const GameStatsMap& stats);

std::int64_t total_playtime(const Bundle& bundle, const GameStatsMap& stats);

/// 1 - sum over all ordered member pairs (self-pairs included) of cosine,
/// divided by n^2 over the n embeddable members.
double diversity(const Bundle& bundle, const EmbeddingMatrix& matrix);

/// n^2-weighted aggregate of per-bundle diversity across the whole set;
/// bundles without embeddable members are skipped.
double coverage(const std::vector<const Bundle*>& bundles, const EmbeddingMatrix& matrix);
double coverage(const Catalog& catalog, const EmbeddingMatrix& matrix);

/// Raw metric value in its natural orientation.
double metric_value(const PopularityScores& scores, Metric m);

/// Value oriented so that bigger always means more popular (negates N0).
/// Cutoffs and categories are computed on oriented values.
double oriented_value(const PopularityScores& scores, Metric m);

/// Nearest-rank percentiles over the value population. Degenerate
/// populations (all values equal) are flagged and reported via `warnings`.
PercentileCutoffs compute_cutoffs(const std::map<std::string, double>& values,
                                  const std::string& metric, double lower_pct = 60.0,
                                  double upper_pct = 80.0,
                                  std::vector<std::string>* warnings = nullptr);

/// value <= lower -> Cat1; <= upper -> Cat2; else Cat3. Degenerate cutoffs
/// put everything in Cat1.
Category categorize_value(double value, const PercentileCutoffs& cutoffs);

std::map<std::string, Category> categorize(const std::map<std::string, double>& values,
                                           const PercentileCutoffs& cutoffs);

/// All five metrics for every bundle with at least one embeddable member;
/// bundles without one are skipped with a warning.
std::map<std::string, PopularityScores> compute_all_scores(
    const Catalog& catalog, const EmbeddingMatrix& matrix,
    std::vector<std::string>* warnings = nullptr);

}  // namespace bundlegen

#endif
