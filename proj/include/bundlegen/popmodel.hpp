#ifndef BUNDLEGEN_POPMODEL_HPP
#define BUNDLEGEN_POPMODEL_HPP

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bundlegen/catalog.hpp"
#include "bundlegen/embeddings.hpp"
#include "bundlegen/metrics.hpp"
#include "bundlegen/types.hpp"

namespace bundlegen {

struct FeatureVector {
    std::string bundle_id;
    Vec values;
};

struct TrainConfig {
    double l2 = 1e-3;
    std::size_t max_epochs = 4000;
    double learning_rate = 0.1;
    double tol = 1e-8;  // stop when the epoch loss change falls below this
    std::uint64_t seed = 1;
};

/// Builds the fixed-order bundle feature vectors of the popularity models.
/// Schema (before leakage masking): emb_mean_1, emb_mean_2, bundle_price,
/// bundle_age_years, discount_pct, top-tag one-hot block, top-genre block,
/// top-spec block, mean_sentiment, total_purchases,
/// playtime_per_download_mean. The one-hot blocks mark the bundle's modal
/// tag/genre/spec when it ranks among the catalog's top K.
class FeatureBuilder {
public:
    FeatureBuilder(const Catalog& catalog, const ReducedEmbedding& reduced,
                   std::size_t top_tags = 20, std::size_t top_genres = 10,
                   std::size_t top_specs = 10);

    /// Leakage-masked schema: total_purchases and playtime_per_download_mean
    /// are dropped for targets P_mb, PB and N0; the emb_mean pair is dropped
    /// for target D (it feeds straight into the diversity definition).
    const std::vector<std::string>& schema(Metric target) const;

    FeatureVector build(const Bundle& bundle, Metric target) const;

    double sentiment_median() const { return sentiment_median_; }
    const std::vector<std::string>& top_tags() const { return top_tags_; }
    const std::vector<std::string>& top_genres() const { return top_genres_; }
    const std::vector<std::string>& top_specs() const { return top_specs_; }

private:
    const Catalog* catalog_;
    const ReducedEmbedding* reduced_;
    GameStatsMap stats_;
    std::vector<std::string> top_tags_, top_genres_, top_specs_;
    std::map<std::string, std::int64_t> tag_freq_, genre_freq_, spec_freq_;
    double sentiment_median_ = 3.0;
    std::array<std::vector<std::string>, 5> schemas_;
};

/// Per-feature training-split statistics; features with zero spread are
/// dropped (weight pinned to 0, std set to 1).
struct Standardization {
    Vec mean;
    Vec stddev;
    std::vector<bool> kept;
};

Standardization fit_standardization(const std::vector<FeatureVector>& features);
Vec standardize(const Standardization& s, const Vec& values);

struct CategoryPrediction {
    Category category = Category::Cat1;
    std::array<double, 3> scores = {0.0, 0.0, 0.0};  // normalized, sums to 1
};

struct LogisticModel {
    std::vector<std::string> schema;
    Standardization stand;
    std::array<Vec, 3> weights;            // Cat1, Cat2, Cat3 one-vs-rest
    std::array<double, 3> intercepts = {0.0, 0.0, 0.0};
    TrainConfig config;
    std::array<std::vector<double>, 3> loss_curves;  // per-class epoch losses
};

struct RegressionModel {
    std::string target_metric;
    std::vector<std::string> schema;
    Standardization stand;
    Vec weights;           // on standardized features and standardized target
    double intercept = 0.0;
    double target_mean = 0.0;
    double target_std = 1.0;
    TrainConfig config;
    std::vector<double> loss_curve;

    /// Coefficients mapped back to the original feature/target scale.
    Vec coefficients_original() const;
    double intercept_original() const;
};

struct EvalReport {
    std::string metric;
    double auc_macro = 0.0;
    double f1_macro = 0.0;
    std::array<double, 3> precision = {0.0, 0.0, 0.0};
    std::array<double, 3> recall = {0.0, 0.0, 0.0};
    std::uint64_t split_seed = 0;
    std::size_t test_size = 0;
};

/// Weighted binary cross-entropy with L2 penalty (intercept unpenalized);
/// returns the loss and fills the analytic gradient. Exposed so tests can
/// check it against finite differences.
double logistic_loss_grad(const std::vector<Vec>& x, const std::vector<int>& y,
                          const std::vector<double>& sample_weight, const Vec& w, double b,
                          double l2, Vec* grad_w, double* grad_b);

/// Half mean squared error with L2 penalty, same contract.
double ridge_loss_grad(const std::vector<Vec>& x, const Vec& y, const Vec& w, double b,
                       double l2, Vec* grad_w, double* grad_b);

/// One-vs-rest logistic regression, full-batch gradient descent on
/// standardized features, inverse-frequency class balancing. Empty `schema`
/// synthesizes f0..fN names.
LogisticModel train_classifier(const std::vector<FeatureVector>& features,
                               const std::vector<Category>& labels, const TrainConfig& config,
                               const std::vector<std::string>& schema = {});

CategoryPrediction predict_category(const LogisticModel& model, const FeatureVector& fv);

/// Ridge regression on standardized features and target, gradient descent.
RegressionModel train_regressor(const std::vector<FeatureVector>& features,
                                const std::vector<double>& targets, const TrainConfig& config,
                                const std::string& target_metric = "",
                                const std::vector<std::string>& schema = {});

double predict_value(const RegressionModel& model, const FeatureVector& fv);

/// Trapezoidal (tie-aware) AUC; labels are 0/1.
double binary_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Scores a trained model on the given data: macro one-vs-rest AUC over the
/// raw per-class sigmoid scores, macro F1 over argmax predictions.
EvalReport score_model(const LogisticModel& model, const std::vector<FeatureVector>& features,
                       const std::vector<Category>& labels, const std::string& metric = "");

/// Stratified train/test split (per-class shuffle with `seed`), trains a
/// fresh classifier on the train part, scores the held-out part.
EvalReport evaluate_classifier(const std::vector<FeatureVector>& features,
                               const std::vector<Category>& labels, const TrainConfig& config,
                               double train_frac, std::uint64_t seed,
                               const std::string& metric = "");

struct MetricModels {
    PercentileCutoffs cutoffs;  // fitted on oriented values of the population
    LogisticModel classifier;
    RegressionModel regressor;  // predicts the raw metric value
};

/// Everything the optimizer needs to score a bundle: per-metric models plus
/// the cutoffs for the aggregate (sum-of-categories) objective.
struct ModelSet {
    std::string embedding_source;
    std::map<std::string, MetricModels> per_metric;  // keyed by metric_name()
    PercentileCutoffs aggregate_cutoffs;
    bool has_aggregate = false;
    std::string fingerprint;

    bool covers(Metric m) const { return per_metric.count(metric_name(m)) > 0; }

    std::string serialize() const;
    static ModelSet deserialize(const std::string& text);
    static ModelSet load(const std::string& path);
    void save(const std::string& path) const;
};

/// Computes population scores, fits cutoffs/labels per target metric and
/// trains classifier + regressor for each. When `with_aggregate` is set the
/// aggregate cutoffs are fitted on the population's category sums.
ModelSet train_models(const Catalog& catalog, const EmbeddingMatrix& matrix,
                      const ReducedEmbedding& reduced, const std::vector<Metric>& targets,
                      bool with_aggregate, const TrainConfig& config,
                      std::vector<std::string>* warnings = nullptr);

}  // namespace bundlegen

#endif
