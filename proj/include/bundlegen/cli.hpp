#ifndef BUNDLEGEN_CLI_HPP
#define BUNDLEGEN_CLI_HPP

#include <cstdint>
#include <string>

#include "bundlegen/catalog.hpp"
#include "bundlegen/embeddings.hpp"
#include "bundlegen/generator.hpp"
#include "bundlegen/popmodel.hpp"

namespace bundlegen {

/// Effective options for one CLI run, merged in precedence order: built-in
/// defaults, then the JSON config file, then explicit flags.
struct CliOptions {
    std::string out = "out";
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0 = machine parallelism; 1 = deterministic path
    std::string reference_date = "2023-08-30";

    // ingest inputs
    std::string games_path;
    std::string users_path;
    std::string bundles_path;

    SyntheticSpec synth;

    EmbeddingConfig embedding;
    std::string embedding_source = "prod2vec";
    std::string fields = "title+tags+genres+specs";
    std::string meta_fields = "tags+genres";
    std::string pretrained_vectors;  // optional "V D" table for content mode

    std::string target = "aggregate";
    TrainConfig train;
    double train_frac = 0.8;

    OptimizationConfig opt;
    std::size_t reps = 30;

    unsigned effective_threads() const;
    Date parsed_reference_date() const;
};

/// Applies a JSON config document onto `options`; any unknown key aborts
/// with the offending key named.
void apply_config_file(const std::string& path, CliOptions& options);

/// Subcommand bodies. Exit codes: 0 success, 1 validation failure,
/// 2 missing prerequisite artifact.
int cmd_ingest(const CliOptions& options);
int cmd_synth(const CliOptions& options);
int cmd_embed(const CliOptions& options);
int cmd_metrics(const CliOptions& options);
int cmd_train(const CliOptions& options);
int cmd_evaluate(const CliOptions& options);
int cmd_optimize(const CliOptions& options);
int cmd_report(const CliOptions& options);

}  // namespace bundlegen

#endif
