#include <algorithm>
#include <cmath>
#include <numeric>

#include "bundlegen/popmodel.hpp"
#include "bundlegen/rng.hpp"

namespace bundlegen {

double binary_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw ValidationError("auc: inconsistent or empty inputs");
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += y == 1 ? 1 : 0;
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw ValidationError("auc: needs both classes in the labels");

    // Mann-Whitney with average ranks; equals the tie-aware trapezoidal ROC
    // area.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos);
    const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

namespace {

double class_logit(const LogisticModel& model, const Vec& standardized, std::size_t c) {
    double z = model.intercepts[c];
    for (std::size_t d = 0; d < standardized.size(); ++d)
        z += model.weights[c][d] * standardized[d];
    return z;
}

}  // namespace

EvalReport score_model(const LogisticModel& model, const std::vector<FeatureVector>& features,
                       const std::vector<Category>& labels, const std::string& metric) {
    if (features.size() != labels.size() || features.empty())
        throw ValidationError("evaluate: inconsistent or empty inputs");
    EvalReport report;
    report.metric = metric;
    report.test_size = features.size();

    std::vector<Vec> x;
    x.reserve(features.size());
    for (const auto& fv : features) {
        if (fv.values.size() != model.schema.size())
            throw ValidationError("evaluate: feature length does not match model schema");
        x.push_back(standardize(model.stand, fv.values));
    }
    std::vector<Category> predictions;
    predictions.reserve(features.size());
    for (const auto& fv : features) predictions.push_back(predict_category(model, fv).category);

    double auc_sum = 0.0, f1_sum = 0.0;
    std::size_t classes_present = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        const Category cat = static_cast<Category>(c + 1);
        std::size_t support = 0;
        for (Category y : labels) support += y == cat ? 1 : 0;
        if (support == 0) continue;
        ++classes_present;

        std::vector<double> scores(features.size());
        std::vector<int> binary(features.size());
        for (std::size_t i = 0; i < features.size(); ++i) {
            scores[i] = class_logit(model, x[i], c);  // AUC only needs the ranking
            binary[i] = labels[i] == cat ? 1 : 0;
        }
        if (support < labels.size()) auc_sum += binary_auc(scores, binary);
        else auc_sum += 1.0;  // degenerate all-positive class

        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < features.size(); ++i) {
            const bool pred_c = predictions[i] == cat;
            const bool true_c = labels[i] == cat;
            tp += pred_c && true_c ? 1 : 0;
            fp += pred_c && !true_c ? 1 : 0;
            fn += !pred_c && true_c ? 1 : 0;
        }
        const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        const double f1 =
            precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        report.precision[c] = precision;
        report.recall[c] = recall;
        f1_sum += f1;
    }
    if (classes_present == 0) throw ValidationError("evaluate: no class present");
    report.auc_macro = auc_sum / static_cast<double>(classes_present);
    report.f1_macro = f1_sum / static_cast<double>(classes_present);
    return report;
}

EvalReport evaluate_classifier(const std::vector<FeatureVector>& features,
                               const std::vector<Category>& labels, const TrainConfig& config,
                               double train_frac, std::uint64_t seed,
                               const std::string& metric) {
    if (features.size() != labels.size() || features.empty())
        throw ValidationError("evaluate: inconsistent or empty inputs");
    if (!(0.0 < train_frac && train_frac < 1.0))
        throw ValidationError("evaluate: train_frac must lie in (0,1)");

    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t c = 0; c < 3; ++c) {
        const Category cat = static_cast<Category>(c + 1);
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cat) members.push_back(i);
        if (members.empty()) continue;
        Rng rng = Rng(seed).substream("split").substream(c);
        for (std::size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[rng.uniform_index(i)]);
        const auto n_train = static_cast<std::size_t>(
            std::floor(train_frac * static_cast<double>(members.size())));
        if (n_train == members.size())
            throw ValidationError("evaluate: class " + to_string(cat) +
                                  " has no held-out test point");
        for (std::size_t i = 0; i < members.size(); ++i)
            (i < n_train ? train_idx : test_idx).push_back(members[i]);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    std::vector<FeatureVector> train_x, test_x;
    std::vector<Category> train_y, test_y;
    for (std::size_t i : train_idx) {
        train_x.push_back(features[i]);
        train_y.push_back(labels[i]);
    }
    for (std::size_t i : test_idx) {
        test_x.push_back(features[i]);
        test_y.push_back(labels[i]);
    }

    const LogisticModel model = train_classifier(train_x, train_y, config);
    EvalReport report = score_model(model, test_x, test_y, metric);
    report.split_seed = seed;
    return report;
}

}  // namespace bundlegen
