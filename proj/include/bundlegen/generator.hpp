#ifndef BUNDLEGEN_GENERATOR_HPP
#define BUNDLEGEN_GENERATOR_HPP

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bundlegen/catalog.hpp"
#include "bundlegen/embeddings.hpp"
#include "bundlegen/metrics.hpp"
#include "bundlegen/popmodel.hpp"
#include "bundlegen/rng.hpp"

namespace bundlegen {

enum class StrategyKind { Add, Replace, Delete, Seed };

std::string to_string(StrategyKind s);
StrategyKind parse_strategy(const std::string& s);

enum class CandidatePool { AllGames, SameCluster };

std::string to_string(CandidatePool p);
CandidatePool parse_pool(const std::string& s);

/// How moves are judged: Category accepts only when the predicted category
/// strictly improves; Value accepts on any regression-predicted improvement
/// beyond 1e-9. Value is the default — single moves rarely jump a whole
/// category, so pure category scoring tends to stall on plateaus.
enum class ScoringMode { Category, Value };

std::string to_string(ScoringMode m);
ScoringMode parse_scoring_mode(const std::string& s);

struct OptimizationConfig {
    StrategyKind strategy = StrategyKind::Replace;
    std::string objective = "P_mb";  // metric name or "aggregate"
    ScoringMode mode = ScoringMode::Value;
    double removal_prob = 0.5;  // p, gates Delete and the Replace removal
    double temperature = 0.2;   // τ of the distance-softmax sampler
    std::size_t max_iters = 200;
    CandidatePool pool = CandidatePool::AllGames;
    std::size_t min_size = 2;
    std::size_t max_size = 89;  // largest bundle observed in the source data
    std::uint64_t seed = 1;
};

struct MoveLog {
    std::size_t iteration = 0;
    std::string move;  // "add", "delete", "replace", "noop"
    std::string game_added;
    std::string game_removed;
    int category_before = 0;
    int category_after = 0;
    double score_before = 0.0;
    double score_after = 0.0;
    bool accepted = false;
    std::string note;  // why a move was skipped or rejected
};

/// Read-only bundle scorer: wires catalog, embeddings, reduced embedding and
/// trained models together for the optimizer.
class ScoringContext {
public:
    ScoringContext(const Catalog& catalog, const EmbeddingMatrix& matrix,
                   const ReducedEmbedding& reduced, const ModelSet& models);

    bool covers_objective(const std::string& objective) const;

    /// Value mode: oriented regression prediction. Category mode: predicted
    /// category (1..3), or the sum of the five predicted categories (5..15)
    /// for the aggregate objective.
    double score(const Bundle& bundle, const std::string& objective, ScoringMode mode) const;

    /// Category used for shift bookkeeping and the Cat3 early stop; derived
    /// from the same model the score uses so accepted moves can only push it
    /// up.
    int category(const Bundle& bundle, const std::string& objective, ScoringMode mode) const;

    const Catalog& catalog() const { return *catalog_; }
    const EmbeddingMatrix& matrix() const { return *matrix_; }
    const ReducedEmbedding& reduced() const { return *reduced_; }
    const ModelSet& models() const { return *models_; }
    const FeatureBuilder& builder() const { return builder_; }

private:
    const Catalog* catalog_;
    const EmbeddingMatrix* matrix_;
    const ReducedEmbedding* reduced_;
    const ModelSet* models_;
    FeatureBuilder builder_;
};

/// Softmax-over-similarity sampler: draws g with probability proportional to
/// exp(cosine(centroid, emb(g)) / τ) over the eligible pool. Games in
/// `exclude` never come back.
std::string sample_candidate_game(const Vec& centroid, const std::vector<std::string>& pool,
                                  const EmbeddingMatrix& matrix, double tau, Rng& rng,
                                  const std::set<std::string>& exclude = {});

/// AllGames: every embeddable game. SameCluster: embeddable games sharing at
/// least one genre with a current member.
std::vector<std::string> build_candidate_pool(const ScoringContext& ctx, const Bundle& bundle,
                                              CandidatePool pool);

/// One greedy step of the configured strategy; returns the (possibly
/// unchanged) bundle and a log entry describing what happened.
std::pair<Bundle, MoveLog> apply_move(const Bundle& bundle, const OptimizationConfig& config,
                                      const ScoringContext& ctx, Rng& rng,
                                      std::size_t iteration);

struct OptimizeResult {
    Bundle bundle;
    std::vector<MoveLog> log;
};

/// Runs at most max_iters moves, stopping early once the objective category
/// reaches Cat3. Deterministic under config.seed.
OptimizeResult optimize_bundle(const Bundle& bundle, const OptimizationConfig& config,
                               const ScoringContext& ctx);

/// Grows {seed_game} to target_size by centroid sampling, then optimizes
/// with Replace moves. Price is the member-price sum discounted by the
/// catalog's median discount. `taken_ids` lets callers avoid id collisions
/// across several generated bundles.
Bundle generate_from_seed(const std::string& seed_game, std::size_t target_size,
                          const OptimizationConfig& config, const ScoringContext& ctx,
                          const std::set<std::string>& taken_ids = {});

inline constexpr std::array<const char*, 3> kShiftNames = {"Cat1->Cat2", "Cat1->Cat3",
                                                           "Cat2->Cat3"};

struct ShiftCell {
    double pct = 0.0;  // mean over repetitions
    double lo = 0.0;   // bootstrap 95% interval
    double hi = 0.0;
    std::size_t eligible = 0;  // bundles starting in the source category
};

struct GenerationReport {
    std::vector<std::string> objectives;
    std::vector<StrategyKind> strategies;
    /// cells[objective][strategy name][shift index]
    std::map<std::string, std::map<std::string, std::array<ShiftCell, 3>>> cells;
    std::uint64_t seed = 0;
    std::size_t reps = 0;

    /// One row per objective × shift; per-strategy pct and interval columns.
    std::string to_csv() const;
};

struct CampaignConfig {
    OptimizationConfig base;  // strategy/objective fields ignored, grid below
    std::vector<std::string> objectives;
    std::vector<StrategyKind> strategies = {StrategyKind::Replace, StrategyKind::Add,
                                            StrategyKind::Delete};
    std::size_t reps = 30;
    std::size_t bootstrap_samples = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

/// Optimizes every catalog bundle under each (objective × strategy) cell
/// across `reps` seeded repetitions and aggregates category-shift
/// percentages with bootstrap intervals. Deterministic for any thread
/// count: tasks carry derived seeds and merge by index.
GenerationReport run_campaign(const ScoringContext& ctx, const CampaignConfig& config);

/// Sum of the five per-metric category numbers, re-categorized with the
/// population cutoffs.
Category aggregate_category(const std::array<Category, 5>& labels,
                            const PercentileCutoffs& cutoffs);

struct ImprovementReport {
    std::vector<std::string> metrics;  // metric names with a trained regressor
    std::map<std::string, double> mean_existing;
    std::map<std::string, double> mean_updated;
    std::map<std::string, double> improvement_pct;

    /// Three rows (existing, updated, improvement_pct), one column per metric.
    std::string to_csv() const;
};

/// Mean regression-predicted metric values before/after optimization.
/// Improvement is signed so that positive always means better (N0 and D
/// improve downward).
ImprovementReport regression_improvement_report(const std::vector<const Bundle*>& before,
                                                const std::vector<const Bundle*>& after,
                                                const ScoringContext& ctx);

}  // namespace bundlegen

#endif
