#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "bundlegen/cli.hpp"
#include "bundlegen/generator.hpp"

namespace bg = bundlegen;

int main(int argc, char** argv) {
    bg::CliOptions o;

    // The config file has to be applied before the flag options are created,
    // so that flags given on the command line override config values while
    // absent flags leave them alone. CLI11 applies config files the other way
    // round, hence the manual pre-scan.
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) config_path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0) config_path = arg.substr(9);
    }
    if (!config_path.empty()) {
        try {
            bg::apply_config_file(config_path, o);
        } catch (const std::exception& e) {
            std::cerr << "bundlegen: " << e.what() << "\n";
            return 1;
        }
    }

    CLI::App app{"bundle popularity metrics, models and greedy bundle synthesis"};
    app.require_subcommand(1);

    std::string config_echo = config_path;  // registered so parsing accepts it
    std::string strategy_str, mode_str, pool_str;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_echo,
                        "JSON config file; explicit flags take precedence");
        cmd->add_option("--out", o.out, "artifact directory")->capture_default_str();
        cmd->add_option("--seed", o.seed, "global seed; every stage derives its own stream")
            ->capture_default_str();
        cmd->add_option("--threads", o.threads, "worker threads; 0 = machine parallelism")
            ->capture_default_str();
        cmd->add_option("--reference-date", o.reference_date,
                        "YYYY-MM-DD date that game ages are measured against")
            ->capture_default_str();
    };
    auto add_source = [&](CLI::App* cmd) {
        cmd->add_option("--embedding-source,--source", o.embedding_source,
                        "content | prod2vec | metaprod2vec")
            ->capture_default_str();
    };

    CLI::App* ingest = app.add_subcommand("ingest", "validate and normalize a catalog");
    add_common(ingest);
    ingest->add_option("--games", o.games_path, "games JSON-lines file");
    ingest->add_option("--users", o.users_path, "user-library JSON-lines file");
    ingest->add_option("--bundles", o.bundles_path, "bundles JSON-lines file");

    CLI::App* synth = app.add_subcommand("synth", "generate the synthetic catalog");
    add_common(synth);
    synth->add_option("--games", o.synth.n_games, "number of games")->capture_default_str();
    synth->add_option("--users", o.synth.n_users, "number of large users")
        ->capture_default_str();
    synth->add_option("--bundles", o.synth.n_bundles, "number of bundles")
        ->capture_default_str();
    synth->add_option("--clusters", o.synth.cluster_count, "planted genre clusters")
        ->capture_default_str();

    CLI::App* embed = app.add_subcommand("embed", "train game embeddings + 2-d reduction");
    add_common(embed);
    add_source(embed);
    embed->add_option("--fields", o.fields, "content text fields, e.g. title+tags+genres")
        ->capture_default_str();
    embed->add_option("--meta-fields", o.meta_fields, "metadata fields for metaprod2vec")
        ->capture_default_str();
    embed->add_option("--dim", o.embedding.dimension, "embedding dimension")
        ->capture_default_str();
    embed->add_option("--window", o.embedding.window, "skip-gram window")
        ->capture_default_str();
    embed->add_option("--negatives", o.embedding.negatives, "negative samples per pair")
        ->capture_default_str();
    embed->add_option("--epochs", o.embedding.epochs, "training epochs")
        ->capture_default_str();
    embed->add_option("--learning-rate", o.embedding.learning_rate, "initial learning rate")
        ->capture_default_str();
    embed->add_option("--exclude-unplayed", o.embedding.exclude_unplayed,
                      "drop games nobody has played")
        ->capture_default_str();
    embed->add_option("--vectors", o.pretrained_vectors,
                      "pretrained word-vector table for content mode");

    CLI::App* metrics = app.add_subcommand("metrics", "per-bundle popularity metrics CSV");
    add_common(metrics);
    add_source(metrics);

    CLI::App* train = app.add_subcommand("train", "fit category + regression models");
    add_common(train);
    add_source(train);
    train->add_option("--target", o.target, "P_eb | P_mb | N0 | PB | D | aggregate")
        ->capture_default_str();
    train->add_option("--l2", o.train.l2, "L2 penalty")->capture_default_str();
    train->add_option("--epochs", o.train.max_epochs, "gradient-descent epoch cap")
        ->capture_default_str();
    train->add_option("--learning-rate", o.train.learning_rate, "gradient-descent step")
        ->capture_default_str();
    train->add_option("--tol", o.train.tol, "loss-change stopping tolerance")
        ->capture_default_str();

    CLI::App* evaluate = app.add_subcommand("evaluate", "held-out AUC/F1 per trained model");
    add_common(evaluate);
    add_source(evaluate);
    evaluate->add_option("--train-frac", o.train_frac, "train fraction of the split")
        ->capture_default_str();
    evaluate->add_option("--l2", o.train.l2, "L2 penalty for the refit")
        ->capture_default_str();
    evaluate->add_option("--epochs", o.train.max_epochs, "gradient-descent epoch cap")
        ->capture_default_str();

    auto add_opt_knobs = [&](CLI::App* cmd) {
        cmd->add_option("--iters", o.opt.max_iters, "optimizer iterations per bundle")
            ->capture_default_str();
        cmd->add_option("--temp", o.opt.temperature, "sampling temperature tau")
            ->capture_default_str();
        cmd->add_option("--removal-prob", o.opt.removal_prob, "removal coin probability p")
            ->capture_default_str();
        cmd->add_option("--pool", pool_str, "candidate pool: all_games | same_cluster");
        cmd->add_option("--score-mode", mode_str, "acceptance scoring: value | category");
        cmd->add_option("--min-size", o.opt.min_size, "bundle size lower bound")
            ->capture_default_str();
        cmd->add_option("--max-size", o.opt.max_size, "bundle size upper bound")
            ->capture_default_str();
        cmd->add_option("--reps", o.reps, "campaign repetitions per cell")
            ->capture_default_str();
    };

    CLI::App* optimize =
        app.add_subcommand("optimize", "rewrite bundles greedily + campaign report");
    add_common(optimize);
    add_source(optimize);
    optimize->add_option("--strategy", strategy_str, "add | replace | delete | seed");
    optimize->add_option("--objective", o.opt.objective,
                         "metric name or \"aggregate\" to optimize")
        ->capture_default_str();
    add_opt_knobs(optimize);

    CLI::App* report = app.add_subcommand("report", "category-shift campaign CSV");
    add_common(report);
    add_source(report);
    add_opt_knobs(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the parse error to stderr
        return 1;
    }

    try {
        if (!strategy_str.empty()) o.opt.strategy = bg::parse_strategy(strategy_str);
        if (!mode_str.empty()) o.opt.mode = bg::parse_scoring_mode(mode_str);
        if (!pool_str.empty()) o.opt.pool = bg::parse_pool(pool_str);
    } catch (const std::exception& e) {
        std::cerr << "bundlegen: " << e.what() << "\n";
        return 1;
    }

    const std::map<std::string, int (*)(const bg::CliOptions&)> commands = {
        {"ingest", bg::cmd_ingest},   {"synth", bg::cmd_synth},
        {"embed", bg::cmd_embed},     {"metrics", bg::cmd_metrics},
        {"train", bg::cmd_train},     {"evaluate", bg::cmd_evaluate},
        {"optimize", bg::cmd_optimize}, {"report", bg::cmd_report}};
    for (const CLI::App* sub : app.get_subcommands()) {
        const auto it = commands.find(sub->get_name());
        if (it != commands.end()) return it->second(o);
    }
    std::cerr << "bundlegen: no subcommand given\n";
    return 1;
}
