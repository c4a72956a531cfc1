#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "bundlegen/catalog.hpp"
#include "bundlegen/cli.hpp"
#include "bundlegen/embeddings.hpp"
#include "bundlegen/generator.hpp"
#include "bundlegen/io.hpp"
#include "bundlegen/metrics.hpp"
#include "bundlegen/popmodel.hpp"
#include "bundlegen/rng.hpp"

namespace bundlegen {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

/// A pipeline artifact a subcommand depends on is absent. Maps to exit 2,
/// unlike ValidationError/IoError which map to exit 1.
class MissingArtifact : public Error {
public:
    explicit MissingArtifact(const std::string& msg) : Error(msg) {}
};

template <typename F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const MissingArtifact& e) {
        std::cerr << "bundlegen: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "bundlegen: " << e.what() << "\n";
        return 1;
    }
}

/// Every stage draws its seed from the one global seed through a named
/// stream, so `--seed` alone pins the whole pipeline.
std::uint64_t derive_seed(std::uint64_t global, std::string_view stage) {
    std::uint64_t s = global;
    splitmix64(s);
    return fnv1a64(stage, s);
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void require(const std::string& path, const std::string& hint) {
    if (!fs::exists(path))
        throw MissingArtifact("missing artifact " + path + " (" + hint + ")");
}

std::string source_tag(const CliOptions& o) {
    return to_string(parse_embedding_source(o.embedding_source));
}

void log_issues(const char* cmd, const std::vector<LoadIssue>& issues, const char* kind) {
    const std::size_t cap = 10;
    for (std::size_t i = 0; i < issues.size() && i < cap; ++i)
        std::cerr << cmd << ": " << kind << " " << issues[i].file << ":" << issues[i].line
                  << ": " << issues[i].message << "\n";
    if (issues.size() > cap)
        std::cerr << cmd << ": ... " << issues.size() - cap << " more " << kind << " records\n";
}

Catalog load_pipeline_catalog(const CliOptions& o, const char* cmd) {
    const std::string games = join(o.out, "games.jsonl");
    const std::string users = join(o.out, "users.jsonl");
    const std::string bundles = join(o.out, "bundles.jsonl");
    const std::string hint = "run `bundlegen ingest` or `bundlegen synth` first";
    require(games, hint);
    require(users, hint);
    require(bundles, hint);
    LoadReport report;
    Catalog catalog = load_catalog(games, users, bundles, o.parsed_reference_date(), &report);
    log_issues(cmd, report.rejected, "rejected");
    return catalog;
}

EmbeddingMatrix load_matrix(const CliOptions& o, const std::string& tag) {
    const std::string path = join(o.out, "embedding_" + tag + ".emb");
    require(path, "run `bundlegen embed --source " + tag + "` first");
    return EmbeddingMatrix::load(path);
}

ReducedEmbedding load_reduced(const CliOptions& o, const std::string& tag) {
    const std::string path = join(o.out, "reduced_" + tag + ".emb");
    require(path, "run `bundlegen embed --source " + tag + "` first");
    return ReducedEmbedding::load(path);
}

ModelSet load_models(const CliOptions& o, const std::string& tag) {
    const std::string path = join(o.out, "models_" + tag + ".json");
    require(path, "run `bundlegen train --source " + tag + "` first");
    return ModelSet::load(path);
}

void write_catalog(const CliOptions& o, const Catalog& catalog) {
    fs::create_directories(o.out);
    atomic_write_file(join(o.out, "games.jsonl"), serialize_games(catalog));
    atomic_write_file(join(o.out, "users.jsonl"), serialize_users(catalog));
    atomic_write_file(join(o.out, "bundles.jsonl"), serialize_bundles(catalog));
}

/// Objectives a model set can serve, in fixed metric order; "aggregate" last.
std::vector<std::string> model_objectives(const ModelSet& models) {
    std::vector<std::string> objectives;
    for (Metric m : kAllMetrics)
        if (models.covers(m)) objectives.push_back(metric_name(m));
    if (models.has_aggregate) objectives.push_back("aggregate");
    return objectives;
}

}  // namespace

int cmd_ingest(const CliOptions& o) {
    return guarded([&] {
        if (o.games_path.empty() || o.users_path.empty() || o.bundles_path.empty())
            throw ValidationError("ingest: --games, --users and --bundles are all required");
        const std::pair<const char*, const std::string*> inputs[] = {
            {"--games", &o.games_path}, {"--users", &o.users_path},
            {"--bundles", &o.bundles_path}};
        for (const auto& [flag, path] : inputs)
            if (!fs::exists(*path))
                throw ValidationError(std::string("ingest: ") + flag +
                                      " file not found: " + *path);
        LoadReport report;
        Catalog catalog = load_catalog(o.games_path, o.users_path, o.bundles_path,
                                       o.parsed_reference_date(), &report);
        log_issues("ingest", report.rejected, "rejected");
        log_issues("ingest", report.warnings, "warning");
        write_catalog(o, catalog);
        std::cerr << "ingest: " << catalog.games.size() << " games, "
                  << catalog.large_users.size() << " users, " << catalog.bundles.size()
                  << " bundles -> " << o.out << "\n";
        return 0;
    });
}

int cmd_synth(const CliOptions& o) {
    return guarded([&] {
        SyntheticSpec spec = o.synth;
        spec.seed = derive_seed(o.seed, "synth");
        Catalog catalog = generate_synthetic_catalog(spec);
        write_catalog(o, catalog);
        std::cerr << "synth: " << catalog.games.size() << " games, "
                  << catalog.large_users.size() << " users, " << catalog.bundles.size()
                  << " bundles -> " << o.out << "\n";
        return 0;
    });
}

int cmd_embed(const CliOptions& o) {
    return guarded([&] {
        EmbeddingConfig config = o.embedding;
        config.source = parse_embedding_source(o.embedding_source);
        config.content_fields = FieldSet::parse(o.fields);
        config.meta_fields = FieldSet::parse(o.meta_fields);
        config.seed = derive_seed(o.seed, "embed");
        Catalog catalog = load_pipeline_catalog(o, "embed");
        const unsigned threads = o.effective_threads();

        SkipgramStats stats;
        EmbeddingMatrix matrix;
        switch (config.source) {
            case EmbeddingSource::Content: {
                WordVectorTable table;
                if (!o.pretrained_vectors.empty()) {
                    if (!fs::exists(o.pretrained_vectors))
                        throw ValidationError("embed: --vectors file not found: " +
                                              o.pretrained_vectors);
                    table = WordVectorTable::load(o.pretrained_vectors);
                } else {
                    table = train_content_vectors(catalog, config, threads, &stats);
                }
                matrix = content_embedding(catalog, table, config.content_fields, config);
                break;
            }
            case EmbeddingSource::Prod2Vec:
                matrix = build_prod2vec(catalog, config, threads, &stats);
                break;
            case EmbeddingSource::MetaProd2Vec:
                matrix = build_metaprod2vec(catalog, config, config.meta_fields, threads,
                                            &stats);
                break;
        }
        for (std::size_t e = 0; e < stats.epoch_loss.size(); ++e)
            std::cerr << "embed: epoch " << e + 1 << "/" << stats.epoch_loss.size()
                      << " loss " << format_double(stats.epoch_loss[e]) << "\n";

        ReducedEmbedding reduced = pca_reduce(matrix);
        const std::string tag = to_string(config.source);
        fs::create_directories(o.out);
        atomic_write_file(join(o.out, "embedding_" + tag + ".emb"), matrix.serialize());
        atomic_write_file(join(o.out, "reduced_" + tag + ".emb"), reduced.serialize());
        std::cerr << "embed: " << matrix.rows.size() << " games (" << matrix.flagged.size()
                  << " flagged), 2-d captured variance "
                  << format_double(reduced.captured_variance) << " -> " << o.out << "\n";
        return 0;
    });
}

int cmd_metrics(const CliOptions& o) {
    return guarded([&] {
        const std::string tag = source_tag(o);
        Catalog catalog = load_pipeline_catalog(o, "metrics");
        EmbeddingMatrix matrix = load_matrix(o, tag);

        std::vector<std::string> warnings;
        const auto scores = compute_all_scores(catalog, matrix, &warnings);
        std::map<std::string, std::map<std::string, Category>> cats;  // metric -> id -> cat
        for (Metric m : kAllMetrics) {
            std::map<std::string, double> oriented;
            for (const auto& [id, s] : scores) oriented[id] = oriented_value(s, m);
            const auto cutoffs = compute_cutoffs(oriented, metric_name(m), 60.0, 80.0,
                                                 &warnings);
            cats[metric_name(m)] = categorize(oriented, cutoffs);
        }
        for (const auto& w : warnings) std::cerr << "metrics: " << w << "\n";

        std::string csv =
            "bundle_id,P_eb,P_mb,N0_b,P_B_b,D_b,cat_P_eb,cat_P_mb,cat_N0_b,cat_P_B_b,cat_D_b\n";
        for (const auto& [id, s] : scores) {
            csv += id;
            for (Metric m : kAllMetrics) csv += "," + format_double(metric_value(s, m));
            for (Metric m : kAllMetrics)
                csv += "," + std::to_string(static_cast<int>(cats[metric_name(m)][id]));
            csv += "\n";
        }
        csv += "coverage," + format_double(coverage(catalog, matrix)) + "\n";

        const std::string path = join(o.out, "metrics_" + tag + ".csv");
        atomic_write_file(path, csv);
        std::cerr << "metrics: " << scores.size() << " bundles scored -> " << path << "\n";
        return 0;
    });
}

int cmd_train(const CliOptions& o) {
    return guarded([&] {
        const std::string tag = source_tag(o);
        Catalog catalog = load_pipeline_catalog(o, "train");
        EmbeddingMatrix matrix = load_matrix(o, tag);
        ReducedEmbedding reduced = load_reduced(o, tag);
        require(join(o.out, "metrics_" + tag + ".csv"),
                "run `bundlegen metrics --source " + tag + "` first");

        TrainConfig config = o.train;
        config.seed = derive_seed(o.seed, "train");
        std::vector<Metric> targets;
        bool with_aggregate = false;
        if (o.target == "aggregate") {
            targets.assign(kAllMetrics.begin(), kAllMetrics.end());
            with_aggregate = true;
        } else {
            targets.push_back(parse_metric(o.target));
        }

        std::vector<std::string> warnings;
        ModelSet models = train_models(catalog, matrix, reduced, targets, with_aggregate,
                                       config, &warnings);
        for (const auto& w : warnings) std::cerr << "train: " << w << "\n";

        const std::string path = join(o.out, "models_" + tag + ".json");
        models.save(path);
        std::cerr << "train: " << models.per_metric.size() << " metric models (fingerprint "
                  << models.fingerprint << ") -> " << path << "\n";
        return 0;
    });
}

int cmd_evaluate(const CliOptions& o) {
    return guarded([&] {
        const std::string requested_tag = source_tag(o);
        Catalog catalog = load_pipeline_catalog(o, "evaluate");
        const std::uint64_t split_seed = derive_seed(o.seed, "evaluate");

        std::vector<std::string> available;
        for (const char* tag : {"content", "prod2vec", "metaprod2vec"})
            if (fs::exists(join(o.out, "models_" + std::string(tag) + ".json")))
                available.push_back(tag);
        if (available.empty())
            throw MissingArtifact("missing artifact " +
                                  join(o.out, "models_" + requested_tag + ".json") +
                                  " (run `bundlegen train` first)");

        std::string csv = "source,metric,auc_macro,f1_macro\n";
        std::size_t evaluated = 0;
        std::string last_error;
        for (const std::string& tag : available) {
            EmbeddingMatrix matrix = load_matrix(o, tag);
            ReducedEmbedding reduced = load_reduced(o, tag);
            ModelSet models = load_models(o, tag);
            const auto scores = compute_all_scores(catalog, matrix);
            FeatureBuilder builder(catalog, reduced);

            TrainConfig config = o.train;
            config.seed = split_seed;

            ordered_json out_json;
            out_json["source"] = tag;
            out_json["train_frac"] = o.train_frac;
            out_json["split_seed"] = split_seed;
            out_json["metrics"] = ordered_json::object();
            for (const auto& [name, mm] : models.per_metric) {
                const Metric metric = parse_metric(name);
                std::vector<FeatureVector> features;
                std::vector<Category> labels;
                for (const auto& [id, s] : scores) {
                    features.push_back(builder.build(catalog.bundles.at(id), metric));
                    labels.push_back(categorize_value(oriented_value(s, metric), mm.cutoffs));
                }
                EvalReport rep;
                try {
                    rep = evaluate_classifier(features, labels, config, o.train_frac,
                                              split_seed, name);
                } catch (const Error& e) {
                    last_error = e.what();
                    std::cerr << "evaluate: " << tag << "/" << name << ": " << e.what()
                              << " (skipped)\n";
                    continue;
                }
                ordered_json m;
                m["auc_macro"] = rep.auc_macro;
                m["f1_macro"] = rep.f1_macro;
                m["precision"] = rep.precision;
                m["recall"] = rep.recall;
                m["test_size"] = rep.test_size;
                out_json["metrics"][name] = m;
                csv += tag + "," + name + "," + format_double(rep.auc_macro) + "," +
                       format_double(rep.f1_macro) + "\n";
                ++evaluated;
            }
            atomic_write_file(join(o.out, "eval_" + tag + ".json"), out_json.dump(2) + "\n");
        }
        if (evaluated == 0)
            throw ValidationError("evaluate: no metric could be evaluated: " + last_error);
        atomic_write_file(join(o.out, "eval.csv"), csv);
        std::cerr << "evaluate: " << evaluated << " metric evaluations -> "
                  << join(o.out, "eval.csv") << "\n";
        return 0;
    });
}

namespace {

ordered_json movelog_json(const std::string& bundle_id, const MoveLog& log) {
    return ordered_json{{"bundle_id", bundle_id},
                        {"iteration", log.iteration},
                        {"move", log.move},
                        {"game_added", log.game_added},
                        {"game_removed", log.game_removed},
                        {"category_before", log.category_before},
                        {"category_after", log.category_after},
                        {"score_before", log.score_before},
                        {"score_after", log.score_after},
                        {"accepted", log.accepted},
                        {"note", log.note}};
}

}  // namespace

int cmd_optimize(const CliOptions& o) {
    return guarded([&] {
        const std::string tag = source_tag(o);
        Catalog catalog = load_pipeline_catalog(o, "optimize");
        EmbeddingMatrix matrix = load_matrix(o, tag);
        ReducedEmbedding reduced = load_reduced(o, tag);
        ModelSet models = load_models(o, tag);
        ScoringContext ctx(catalog, matrix, reduced, models);

        OptimizationConfig base = o.opt;
        if (!ctx.covers_objective(base.objective))
            throw ValidationError("optimize: models_" + tag + ".json does not cover objective \"" +
                                  base.objective + "\"; retrain with --target aggregate");

        // Pass 1: rewrite every bundle with the configured strategy/objective.
        const std::uint64_t stage_seed = derive_seed(o.seed, "optimize");
        Catalog updated = catalog;
        std::string movelog;
        std::size_t accepted = 0, skipped = 0;
        for (const auto& [id, bundle] : catalog.bundles) {
            OptimizationConfig oc = base;
            std::uint64_t s = stage_seed;
            splitmix64(s);
            oc.seed = fnv1a64(id, s);
            try {
                OptimizeResult result = optimize_bundle(bundle, oc, ctx);
                updated.bundles[id] = result.bundle;
                for (const MoveLog& log : result.log) {
                    if (log.accepted) ++accepted;
                    movelog += movelog_json(id, log).dump() + "\n";
                }
            } catch (const Error& e) {
                ++skipped;
                MoveLog log;
                log.move = "noop";
                log.note = std::string("bundle not optimizable: ") + e.what();
                movelog += movelog_json(id, log).dump() + "\n";
            }
        }
        fs::create_directories(o.out);
        atomic_write_file(join(o.out, "updated_bundles.jsonl"), serialize_bundles(updated));
        atomic_write_file(join(o.out, "movelog.jsonl"), movelog);

        // Pass 2: strategy-grid campaign plus regression improvement table.
        CampaignConfig cc;
        cc.base = base;
        cc.objectives = model_objectives(models);
        cc.reps = o.reps;
        cc.seed = derive_seed(o.seed, "campaign");
        cc.threads = o.effective_threads();
        GenerationReport campaign = run_campaign(ctx, cc);

        std::vector<const Bundle*> before, after;
        for (const auto& [id, bundle] : catalog.bundles) {
            before.push_back(&bundle);
            after.push_back(&updated.bundles.at(id));
        }
        ImprovementReport improvement = regression_improvement_report(before, after, ctx);

        atomic_write_file(join(o.out, "report.csv"),
                          campaign.to_csv() + "\n" + improvement.to_csv());
        std::cerr << "optimize: " << catalog.bundles.size() << " bundles (" << accepted
                  << " accepted moves, " << skipped << " skipped bundles) -> " << o.out
                  << "\n";
        return 0;
    });
}

int cmd_report(const CliOptions& o) {
    return guarded([&] {
        const std::string tag = source_tag(o);
        Catalog catalog = load_pipeline_catalog(o, "report");
        EmbeddingMatrix matrix = load_matrix(o, tag);
        ReducedEmbedding reduced = load_reduced(o, tag);
        ModelSet models = load_models(o, tag);
        ScoringContext ctx(catalog, matrix, reduced, models);

        CampaignConfig cc;
        cc.base = o.opt;
        cc.objectives = model_objectives(models);
        cc.reps = o.reps;
        cc.seed = derive_seed(o.seed, "campaign");
        cc.threads = o.effective_threads();
        GenerationReport campaign = run_campaign(ctx, cc);

        const std::string csv = campaign.to_csv();
        atomic_write_file(join(o.out, "campaign_report.csv"), csv);
        std::cout << csv;
        std::cerr << "report: " << cc.objectives.size() << " objectives x "
                  << cc.strategies.size() << " strategies, " << cc.reps << " reps -> "
                  << join(o.out, "campaign_report.csv") << "\n";
        return 0;
    });
}

}  // namespace bundlegen
