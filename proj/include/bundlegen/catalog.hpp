#ifndef BUNDLEGEN_CATALOG_HPP
#define BUNDLEGEN_CATALOG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bundlegen/types.hpp"

namespace bundlegen {

/// Non-fatal issues collected while loading: skipped records and ignored
/// unknown fields, each tied to file + line.
struct LoadIssue {
    std::string file;
    std::size_t line = 0;  // 1-based
    std::string message;
};

struct LoadReport {
    std::vector<LoadIssue> rejected;  // records dropped for invariant violations
    std::vector<LoadIssue> warnings;  // unknown fields, etc.
};

/// Loads and validates the three JSON-lines files. Malformed or
/// invariant-violating records are rejected (reported with line numbers in
/// `report`); duplicate ids and dangling game references are fatal.
Catalog load_catalog(const std::string& games_path,
                     const std::string& large_users_path,
                     const std::string& bundles_path,
                     const Date& reference_date,
                     LoadReport* report = nullptr);

/// Deterministic JSON-lines serialization (games/users/bundles). Games and
/// bundles are emitted sorted by id, users in stored order; load -> save ->
/// load round-trips to an identical catalog.
std::string serialize_games(const Catalog& catalog);
std::string serialize_users(const Catalog& catalog);
std::string serialize_bundles(const Catalog& catalog);

void save_catalog(const Catalog& catalog,
                  const std::string& games_path,
                  const std::string& large_users_path,
                  const std::string& bundles_path);

/// One GameStats per game, including games nobody holds.
GameStatsMap compute_game_stats(const Catalog& catalog);

struct SyntheticSpec {
    std::uint64_t seed = 1;
    std::size_t n_games = 200;
    std::size_t n_users = 50;
    std::size_t n_bundles = 40;
    std::size_t cluster_count = 5;
};

/// Deterministic desk-scale catalog with planted structure: games fall into
/// genre/tag clusters, per-cluster popularity is power-law, each user buys
/// mostly inside one home cluster, and bundles split into cluster-coherent
/// "popular" ones and cross-cluster junk ones (the optimizer's raw material).
Catalog generate_synthetic_catalog(const SyntheticSpec& spec);

/// Cluster index a synthetic game was planted in (parsed from its genre).
/// Returns -1 for games without a "cluster<k>" genre.
int synthetic_cluster_of(const Game& game);

}  // namespace bundlegen

#endif
