#include <algorithm>
#include <cmath>

#include "bundlegen/popmodel.hpp"
#include "bundlegen/rng.hpp"

namespace bundlegen {

namespace {

double sigmoid(double x) {
    if (x > 40.0) return 1.0;
    if (x < -40.0) return 0.0;
    return 1.0 / (1.0 + std::exp(-x));
}

/// -y log σ(z) - (1-y) log(1-σ(z)) without overflow.
double bce(double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::fabs(z)));
}

void check_training_inputs(const std::vector<FeatureVector>& features, std::size_t targets) {
    if (features.size() < 20)
        throw ValidationError("train: need at least 20 training bundles, have " +
                              std::to_string(features.size()));
    if (features.size() != targets)
        throw ValidationError("train: features/targets size mismatch");
    const std::size_t dim = features.front().values.size();
    for (const auto& fv : features) {
        if (fv.values.size() != dim)
            throw ValidationError("train: inconsistent feature lengths");
        if (!all_finite(fv.values))
            throw ValidationError("train: non-finite feature in bundle \"" + fv.bundle_id + "\"");
    }
}

std::vector<std::string> default_schema(std::size_t dim, const std::vector<std::string>& given) {
    if (!given.empty()) {
        if (given.size() != dim)
            throw ValidationError("train: schema length does not match feature length");
        return given;
    }
    std::vector<std::string> names;
    names.reserve(dim);
    for (std::size_t i = 0; i < dim; ++i) names.push_back("f" + std::to_string(i));
    return names;
}

struct GdResult {
    Vec w;
    double b = 0.0;
    std::vector<double> losses;
};

/// Full-batch descent with backtracking halving, so the recorded loss curve
/// is non-increasing; stops when the loss change drops below tol.
template <typename LossGrad>
GdResult gradient_descent(std::size_t dim, const TrainConfig& config, LossGrad&& loss_grad) {
    GdResult result;
    result.w.assign(dim, 0.0);
    Vec gw(dim);
    double gb = 0.0;
    double loss = loss_grad(result.w, result.b, &gw, &gb);
    result.losses.push_back(loss);
    double lr = config.learning_rate;
    Vec w_try(dim);
    Vec gw_try(dim);
    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        double next = loss;
        double b_try = result.b;
        double gb_try = gb;
        while (true) {
            for (std::size_t d = 0; d < dim; ++d) w_try[d] = result.w[d] - lr * gw[d];
            b_try = result.b - lr * gb;
            next = loss_grad(w_try, b_try, &gw_try, &gb_try);
            if (next <= loss || lr < 1e-14) break;
            lr *= 0.5;
        }
        if (next > loss) break;  // step size exhausted
        result.w = w_try;
        result.b = b_try;
        gw = gw_try;
        gb = gb_try;
        result.losses.push_back(next);
        const double change = loss - next;
        loss = next;
        if (change < config.tol) break;
        lr = std::min(lr * 1.25, config.learning_rate);
    }
    return result;
}

}  // namespace

Standardization fit_standardization(const std::vector<FeatureVector>& features) {
    if (features.empty()) throw ValidationError("standardization: empty feature set");
    const std::size_t dim = features.front().values.size();
    Standardization s;
    s.mean.assign(dim, 0.0);
    s.stddev.assign(dim, 1.0);
    s.kept.assign(dim, true);
    const double n = static_cast<double>(features.size());
    for (const auto& fv : features)
        for (std::size_t d = 0; d < dim; ++d) s.mean[d] += fv.values[d];
    for (auto& m : s.mean) m /= n;
    Vec sq(dim, 0.0);
    for (const auto& fv : features)
        for (std::size_t d = 0; d < dim; ++d) {
            const double c = fv.values[d] - s.mean[d];
            sq[d] += c * c;
        }
    for (std::size_t d = 0; d < dim; ++d) {
        // Population std keeps standardization invariant under row duplication.
        const double sd = std::sqrt(sq[d] / n);
        if (sd > 1e-12) {
            s.stddev[d] = sd;
        } else {
            s.kept[d] = false;  // constant feature carries no signal
            s.stddev[d] = 1.0;
        }
    }
    return s;
}

Vec standardize(const Standardization& s, const Vec& values) {
    if (values.size() != s.mean.size())
        throw ValidationError("standardize: feature length mismatch");
    Vec out(values.size());
    for (std::size_t d = 0; d < values.size(); ++d)
        out[d] = s.kept[d] ? (values[d] - s.mean[d]) / s.stddev[d] : 0.0;
    return out;
}

double logistic_loss_grad(const std::vector<Vec>& x, const std::vector<int>& y,
                          const std::vector<double>& sample_weight, const Vec& w, double b,
                          double l2, Vec* grad_w, double* grad_b) {
    if (x.empty() || x.size() != y.size() || x.size() != sample_weight.size())
        throw ValidationError("logistic loss: inconsistent input sizes");
    const std::size_t dim = w.size();
    if (grad_w) grad_w->assign(dim, 0.0);
    if (grad_b) *grad_b = 0.0;
    double total_weight = 0.0;
    for (double sw : sample_weight) total_weight += sw;
    if (total_weight <= 0.0) throw ValidationError("logistic loss: zero total sample weight");

    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double z = b;
        for (std::size_t d = 0; d < dim; ++d) z += w[d] * x[i][d];
        const double yi = static_cast<double>(y[i]);
        loss += sample_weight[i] * bce(z, yi);
        if (grad_w || grad_b) {
            const double g = sample_weight[i] * (sigmoid(z) - yi) / total_weight;
            if (grad_w)
                for (std::size_t d = 0; d < dim; ++d) (*grad_w)[d] += g * x[i][d];
            if (grad_b) *grad_b += g;
        }
    }
    loss /= total_weight;
    for (std::size_t d = 0; d < dim; ++d) {
        loss += 0.5 * l2 * w[d] * w[d];
        if (grad_w) (*grad_w)[d] += l2 * w[d];
    }
    return loss;
}

double ridge_loss_grad(const std::vector<Vec>& x, const Vec& y, const Vec& w, double b,
                       double l2, Vec* grad_w, double* grad_b) {
    if (x.empty() || x.size() != y.size())
        throw ValidationError("ridge loss: inconsistent input sizes");
    const std::size_t dim = w.size();
    if (grad_w) grad_w->assign(dim, 0.0);
    if (grad_b) *grad_b = 0.0;
    const double n = static_cast<double>(x.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double pred = b;
        for (std::size_t d = 0; d < dim; ++d) pred += w[d] * x[i][d];
        const double r = pred - y[i];
        loss += 0.5 * r * r;
        if (grad_w || grad_b) {
            const double g = r / n;
            if (grad_w)
                for (std::size_t d = 0; d < dim; ++d) (*grad_w)[d] += g * x[i][d];
            if (grad_b) *grad_b += g;
        }
    }
    loss /= n;
    for (std::size_t d = 0; d < dim; ++d) {
        loss += 0.5 * l2 * w[d] * w[d];
        if (grad_w) (*grad_w)[d] += l2 * w[d];
    }
    return loss;
}

LogisticModel train_classifier(const std::vector<FeatureVector>& features,
                               const std::vector<Category>& labels, const TrainConfig& config,
                               const std::vector<std::string>& schema) {
    check_training_inputs(features, labels.size());
    std::array<std::size_t, 3> class_counts = {0, 0, 0};
    for (Category c : labels) class_counts[static_cast<std::size_t>(c) - 1] += 1;
    std::size_t distinct = 0;
    for (std::size_t n : class_counts) distinct += n > 0 ? 1 : 0;
    if (distinct < 2) throw ValidationError("train: all bundles fall in a single category");

    const std::size_t dim = features.front().values.size();
    LogisticModel model;
    model.config = config;
    model.schema = default_schema(dim, schema);
    model.stand = fit_standardization(features);

    std::vector<Vec> x;
    x.reserve(features.size());
    for (const auto& fv : features) x.push_back(standardize(model.stand, fv.values));
    const double n = static_cast<double>(features.size());

    for (std::size_t c = 0; c < 3; ++c) {
        if (class_counts[c] == 0) {
            // Absent class: pin its one-vs-rest score to ~0 so it never wins.
            model.weights[c].assign(dim, 0.0);
            model.intercepts[c] = -30.0;
            model.loss_curves[c].clear();
            continue;
        }
        std::vector<int> y(features.size());
        std::vector<double> sw(features.size());
        const double n_pos = static_cast<double>(class_counts[c]);
        const double n_neg = n - n_pos;
        for (std::size_t i = 0; i < features.size(); ++i) {
            y[i] = labels[i] == static_cast<Category>(c + 1) ? 1 : 0;
            sw[i] = y[i] == 1 ? n / (2.0 * n_pos) : n / (2.0 * std::max(n_neg, 1.0));
        }
        GdResult r = gradient_descent(dim, config, [&](const Vec& w, double b, Vec* gw,
                                                       double* gb) {
            return logistic_loss_grad(x, y, sw, w, b, config.l2, gw, gb);
        });
        model.weights[c] = std::move(r.w);
        model.intercepts[c] = r.b;
        model.loss_curves[c] = std::move(r.losses);
    }
    return model;
}

CategoryPrediction predict_category(const LogisticModel& model, const FeatureVector& fv) {
    if (fv.values.size() != model.schema.size())
        throw ValidationError("predict: feature length " + std::to_string(fv.values.size()) +
                              " does not match schema length " +
                              std::to_string(model.schema.size()));
    const Vec x = standardize(model.stand, fv.values);
    CategoryPrediction pred;
    double total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        double z = model.intercepts[c];
        for (std::size_t d = 0; d < x.size(); ++d) z += model.weights[c][d] * x[d];
        pred.scores[c] = sigmoid(z);
        total += pred.scores[c];
    }
    if (total > 0.0)
        for (auto& s : pred.scores) s /= total;
    else
        pred.scores = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c)
        if (pred.scores[c] > pred.scores[best]) best = c;  // ties keep the lower category
    pred.category = static_cast<Category>(best + 1);
    return pred;
}

RegressionModel train_regressor(const std::vector<FeatureVector>& features,
                                const std::vector<double>& targets, const TrainConfig& config,
                                const std::string& target_metric,
                                const std::vector<std::string>& schema) {
    check_training_inputs(features, targets.size());
    for (double t : targets)
        if (!std::isfinite(t)) throw ValidationError("train: non-finite regression target");

    const std::size_t dim = features.front().values.size();
    RegressionModel model;
    model.config = config;
    model.target_metric = target_metric;
    model.schema = default_schema(dim, schema);
    model.stand = fit_standardization(features);

    const double n = static_cast<double>(targets.size());
    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= n;
    double var = 0.0;
    for (double t : targets) var += (t - mean) * (t - mean);
    const double std_dev = std::sqrt(var / n);
    model.target_mean = mean;
    model.target_std = std_dev > 1e-12 ? std_dev : 1.0;

    if (std_dev <= 1e-12) {
        // Constant target: exact fit, nothing to descend.
        model.weights.assign(dim, 0.0);
        model.intercept = 0.0;
        model.loss_curve = {0.0};
        return model;
    }

    std::vector<Vec> x;
    x.reserve(features.size());
    for (const auto& fv : features) x.push_back(standardize(model.stand, fv.values));
    Vec y(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
        y[i] = (targets[i] - model.target_mean) / model.target_std;

    GdResult r = gradient_descent(dim, config, [&](const Vec& w, double b, Vec* gw, double* gb) {
        return ridge_loss_grad(x, y, w, b, config.l2, gw, gb);
    });
    model.weights = std::move(r.w);
    model.intercept = r.b;
    model.loss_curve = std::move(r.losses);
    return model;
}

double predict_value(const RegressionModel& model, const FeatureVector& fv) {
    if (fv.values.size() != model.schema.size())
        throw ValidationError("predict: feature length " + std::to_string(fv.values.size()) +
                              " does not match schema length " +
                              std::to_string(model.schema.size()));
    const Vec x = standardize(model.stand, fv.values);
    double z = model.intercept;
    for (std::size_t d = 0; d < x.size(); ++d) z += model.weights[d] * x[d];
    return model.target_mean + model.target_std * z;
}

Vec RegressionModel::coefficients_original() const {
    Vec coef(weights.size(), 0.0);
    for (std::size_t d = 0; d < weights.size(); ++d)
        if (stand.kept[d]) coef[d] = target_std * weights[d] / stand.stddev[d];
    return coef;
}

double RegressionModel::intercept_original() const {
    double b = intercept;
    for (std::size_t d = 0; d < weights.size(); ++d)
        if (stand.kept[d]) b -= weights[d] * stand.mean[d] / stand.stddev[d];
    return target_mean + target_std * b;
}

}  // namespace bundlegen
