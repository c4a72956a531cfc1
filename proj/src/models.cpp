#include <algorithm>
#include <cstdio>

#include "json.hpp"

#include "bundlegen/io.hpp"
#include "bundlegen/popmodel.hpp"
#include "bundlegen/rng.hpp"

namespace bundlegen {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json cutoffs_to_json(const PercentileCutoffs& c) {
    ordered_json j;
    j["metric"] = c.metric;
    j["lower_pct"] = c.lower_pct;
    j["upper_pct"] = c.upper_pct;
    j["lower_value"] = c.lower_value;
    j["upper_value"] = c.upper_value;
    j["degenerate"] = c.degenerate;
    return j;
}

PercentileCutoffs cutoffs_from_json(const ordered_json& j) {
    PercentileCutoffs c;
    c.metric = j.at("metric").get<std::string>();
    c.lower_pct = j.at("lower_pct").get<double>();
    c.upper_pct = j.at("upper_pct").get<double>();
    c.lower_value = j.at("lower_value").get<double>();
    c.upper_value = j.at("upper_value").get<double>();
    c.degenerate = j.at("degenerate").get<bool>();
    return c;
}

ordered_json stand_to_json(const Standardization& s) {
    ordered_json j;
    j["mean"] = s.mean;
    j["std"] = s.stddev;
    std::vector<int> kept;
    kept.reserve(s.kept.size());
    for (bool k : s.kept) kept.push_back(k ? 1 : 0);
    j["kept"] = kept;
    return j;
}

Standardization stand_from_json(const ordered_json& j) {
    Standardization s;
    s.mean = j.at("mean").get<Vec>();
    s.stddev = j.at("std").get<Vec>();
    for (int k : j.at("kept").get<std::vector<int>>()) s.kept.push_back(k != 0);
    if (s.mean.size() != s.stddev.size() || s.mean.size() != s.kept.size())
        throw ValidationError("model file: inconsistent standardization block");
    return s;
}

ordered_json config_to_json(const TrainConfig& c) {
    ordered_json j;
    j["l2"] = c.l2;
    j["max_epochs"] = c.max_epochs;
    j["learning_rate"] = c.learning_rate;
    j["tol"] = c.tol;
    j["seed"] = c.seed;
    return j;
}

TrainConfig config_from_json(const ordered_json& j) {
    TrainConfig c;
    c.l2 = j.at("l2").get<double>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.tol = j.at("tol").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

ordered_json classifier_to_json(const LogisticModel& m) {
    ordered_json j;
    j["schema"] = m.schema;
    j["standardization"] = stand_to_json(m.stand);
    j["weights"] = ordered_json::array({m.weights[0], m.weights[1], m.weights[2]});
    j["intercepts"] = m.intercepts;
    j["config"] = config_to_json(m.config);
    return j;
}

LogisticModel classifier_from_json(const ordered_json& j) {
    LogisticModel m;
    m.schema = j.at("schema").get<std::vector<std::string>>();
    m.stand = stand_from_json(j.at("standardization"));
    const auto& w = j.at("weights");
    if (!w.is_array() || w.size() != 3)
        throw ValidationError("model file: classifier needs 3 weight vectors");
    for (std::size_t c = 0; c < 3; ++c) {
        m.weights[c] = w[c].get<Vec>();
        if (m.weights[c].size() != m.schema.size())
            throw ValidationError("model file: classifier weight length mismatch");
    }
    const auto intercepts = j.at("intercepts").get<std::vector<double>>();
    if (intercepts.size() != 3)
        throw ValidationError("model file: classifier needs 3 intercepts");
    std::copy(intercepts.begin(), intercepts.end(), m.intercepts.begin());
    m.config = config_from_json(j.at("config"));
    return m;
}

ordered_json regressor_to_json(const RegressionModel& m) {
    ordered_json j;
    j["target_metric"] = m.target_metric;
    j["schema"] = m.schema;
    j["standardization"] = stand_to_json(m.stand);
    j["weights"] = m.weights;
    j["intercept"] = m.intercept;
    j["target_mean"] = m.target_mean;
    j["target_std"] = m.target_std;
    j["config"] = config_to_json(m.config);
    return j;
}

RegressionModel regressor_from_json(const ordered_json& j) {
    RegressionModel m;
    m.target_metric = j.at("target_metric").get<std::string>();
    m.schema = j.at("schema").get<std::vector<std::string>>();
    m.stand = stand_from_json(j.at("standardization"));
    m.weights = j.at("weights").get<Vec>();
    if (m.weights.size() != m.schema.size())
        throw ValidationError("model file: regressor weight length mismatch");
    m.intercept = j.at("intercept").get<double>();
    m.target_mean = j.at("target_mean").get<double>();
    m.target_std = j.at("target_std").get<double>();
    m.config = config_from_json(j.at("config"));
    return m;
}

}  // namespace

std::string ModelSet::serialize() const {
    ordered_json j;
    j["embedding_source"] = embedding_source;
    j["training_fingerprint"] = fingerprint;
    ordered_json metrics = ordered_json::object();
    for (const auto& [name, models] : per_metric) {
        ordered_json entry;
        entry["cutoffs"] = cutoffs_to_json(models.cutoffs);
        entry["classifier"] = classifier_to_json(models.classifier);
        entry["regressor"] = regressor_to_json(models.regressor);
        metrics[name] = std::move(entry);
    }
    j["metrics"] = std::move(metrics);
    if (has_aggregate)
        j["aggregate_cutoffs"] = cutoffs_to_json(aggregate_cutoffs);
    return j.dump(2) + "\n";
}

ModelSet ModelSet::deserialize(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("model file: bad JSON: ") + e.what());
    }
    try {
        ModelSet set;
        set.embedding_source = j.at("embedding_source").get<std::string>();
        set.fingerprint = j.at("training_fingerprint").get<std::string>();
        for (const auto& [name, entry] : j.at("metrics").items()) {
            MetricModels models;
            models.cutoffs = cutoffs_from_json(entry.at("cutoffs"));
            models.classifier = classifier_from_json(entry.at("classifier"));
            models.regressor = regressor_from_json(entry.at("regressor"));
            set.per_metric.emplace(name, std::move(models));
        }
        if (j.contains("aggregate_cutoffs")) {
            set.aggregate_cutoffs = cutoffs_from_json(j.at("aggregate_cutoffs"));
            set.has_aggregate = true;
        }
        return set;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError(std::string("model file: ") + e.what());
    }
}

ModelSet ModelSet::load(const std::string& path) { return deserialize(read_file(path)); }

void ModelSet::save(const std::string& path) const { atomic_write_file(path, serialize()); }

ModelSet train_models(const Catalog& catalog, const EmbeddingMatrix& matrix,
                      const ReducedEmbedding& reduced, const std::vector<Metric>& targets,
                      bool with_aggregate, const TrainConfig& config,
                      std::vector<std::string>* warnings) {
    std::vector<Metric> wanted;
    for (Metric m : kAllMetrics)
        if (std::find(targets.begin(), targets.end(), m) != targets.end()) wanted.push_back(m);
    if (with_aggregate && wanted.size() != kAllMetrics.size())
        throw ValidationError("train: the aggregate objective needs all five metric models");
    if (wanted.empty()) throw ValidationError("train: no target metric given");

    const auto scores = compute_all_scores(catalog, matrix, warnings);
    const FeatureBuilder builder(catalog, reduced);

    ModelSet set;
    set.embedding_source = to_string(matrix.config.source);

    std::uint64_t fp = 0xcbf29ce484222325ull;
    const auto mix = [&fp](const std::string& s) { fp = fnv1a64(s, fp); };
    mix(set.embedding_source);
    mix(std::to_string(scores.size()));
    mix(std::to_string(config.seed));

    std::map<std::string, std::int64_t> category_sums;
    for (Metric m : wanted) {
        std::map<std::string, double> oriented, raw;
        for (const auto& [id, s] : scores) {
            oriented[id] = oriented_value(s, m);
            raw[id] = metric_value(s, m);
        }
        MetricModels models;
        models.cutoffs = compute_cutoffs(oriented, metric_name(m), 60.0, 80.0, warnings);
        const auto labels_by_id = categorize(oriented, models.cutoffs);

        std::vector<FeatureVector> features;
        std::vector<Category> labels;
        std::vector<double> targets_raw;
        features.reserve(scores.size());
        for (const auto& [id, s] : scores) {
            features.push_back(builder.build(catalog.bundles.at(id), m));
            labels.push_back(labels_by_id.at(id));
            targets_raw.push_back(raw.at(id));
            category_sums[id] += static_cast<std::int64_t>(labels_by_id.at(id));
        }
        models.classifier = train_classifier(features, labels, config, builder.schema(m));
        models.regressor =
            train_regressor(features, targets_raw, config, metric_name(m), builder.schema(m));
        mix(metric_name(m));
        mix(format_double(models.cutoffs.lower_value));
        mix(format_double(models.cutoffs.upper_value));
        set.per_metric.emplace(metric_name(m), std::move(models));
    }

    if (with_aggregate) {
        std::map<std::string, double> sums;
        for (const auto& [id, sum] : category_sums) sums[id] = static_cast<double>(sum);
        set.aggregate_cutoffs = compute_cutoffs(sums, "aggregate", 60.0, 80.0, warnings);
        set.has_aggregate = true;
        mix(format_double(set.aggregate_cutoffs.lower_value));
        mix(format_double(set.aggregate_cutoffs.upper_value));
    }

    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fp));
    set.fingerprint = buf;
    return set;
}

}  // namespace bundlegen
