#include "bundlegen/catalog.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "bundlegen/io.hpp"

namespace bundlegen {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string at(const std::string& file, std::size_t line) {
    return file + ":" + std::to_string(line) + ": ";
}

void warn_unknown_fields(const json& obj, const std::set<std::string>& known,
                         const std::string& file, std::size_t line, LoadReport* report) {
    if (!report) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key())) {
            report->warnings.push_back({file, line, "ignoring unknown field \"" + it.key() + "\""});
        }
    }
}

// Parses one games.jsonl record; throws ValidationError on any violation.
Game parse_game(const json& j, const std::string& file, std::size_t line, LoadReport* report) {
    static const std::set<std::string> known = {"game_id", "title", "tags", "genres", "specs",
                                                "price", "release_date", "developer", "sentiment"};
    warn_unknown_fields(j, known, file, line, report);
    Game g;
    g.game_id = j.at("game_id").get<std::string>();
    if (g.game_id.empty()) throw ValidationError("empty game_id");
    g.title = j.at("title").get<std::string>();
    if (g.title.empty()) throw ValidationError("empty title for game \"" + g.game_id + "\"");
    if (j.contains("tags")) g.tags = j.at("tags").get<std::vector<std::string>>();
    if (j.contains("genres")) g.genres = j.at("genres").get<std::vector<std::string>>();
    if (j.contains("specs")) g.specs = j.at("specs").get<std::vector<std::string>>();
    g.price = j.value("price", 0.0);
    if (!(g.price >= 0.0)) throw ValidationError("negative price for game \"" + g.game_id + "\"");
    g.release_date = Date::parse(j.at("release_date").get<std::string>());
    if (j.contains("developer") && !j.at("developer").is_null()) {
        g.developer = j.at("developer").get<std::string>();
    }
    if (j.contains("sentiment") && !j.at("sentiment").is_null()) {
        int s = j.at("sentiment").get<int>();
        if (!is_valid_sentiment(s)) {
            throw ValidationError("sentiment " + std::to_string(s) +
                                  " not in {1,2,3,5} for game \"" + g.game_id + "\"");
        }
        g.sentiment = s;
    }
    return g;
}

UserLibrary parse_user(const json& j, const std::string& file, std::size_t line, LoadReport* report) {
    static const std::set<std::string> known = {"user_id", "items"};
    warn_unknown_fields(j, known, file, line, report);
    UserLibrary u;
    u.user_id = j.at("user_id").get<std::string>();
    if (u.user_id.empty()) throw ValidationError("empty user_id");
    for (const auto& item : j.at("items")) {
        const std::string gid = item.at("game_id").get<std::string>();
        const std::int64_t pt = item.at("playtime_min").get<std::int64_t>();
        if (pt < 0) {
            throw ValidationError("negative playtime for user \"" + u.user_id +
                                  "\", game \"" + gid + "\"");
        }
        u.holdings[gid] = pt;
    }
    return u;
}

Bundle parse_bundle(const json& j, const std::string& file, std::size_t line, LoadReport* report) {
    static const std::set<std::string> known = {"bundle_id", "name", "items",
                                                "price", "discount_pct", "purchasers"};
    warn_unknown_fields(j, known, file, line, report);
    Bundle b;
    b.bundle_id = j.at("bundle_id").get<std::string>();
    if (b.bundle_id.empty()) throw ValidationError("empty bundle_id");
    b.name = j.value("name", std::string());
    b.item_ids = j.at("items").get<std::vector<std::string>>();
    if (b.item_ids.empty()) {
        throw ValidationError("bundle \"" + b.bundle_id + "\" has no items");
    }
    std::set<std::string> seen;
    for (const auto& id : b.item_ids) {
        if (!seen.insert(id).second) {
            throw ValidationError("bundle \"" + b.bundle_id + "\" lists \"" + id + "\" twice");
        }
    }
    b.price = j.value("price", 0.0);
    if (!(b.price >= 0.0)) throw ValidationError("negative price for bundle \"" + b.bundle_id + "\"");
    b.discount_pct = j.value("discount_pct", 0.0);
    if (!(b.discount_pct >= 0.0 && b.discount_pct <= 100.0)) {
        throw ValidationError("discount_pct outside [0,100] for bundle \"" + b.bundle_id + "\"");
    }
    if (j.contains("purchasers")) {
        for (const auto& p : j.at("purchasers")) b.purchaser_ids.insert(p.get<std::string>());
    }
    return b;
}

// Runs `parse` over every line of a jsonl file. Malformed / invalid records
// are reported and skipped; duplicates are fatal.
template <typename T, typename ParseFn, typename KeyFn, typename SinkFn>
void load_jsonl(const std::string& path, LoadReport* report,
                ParseFn parse, KeyFn key_of, SinkFn sink) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + path);
    std::set<std::string> keys;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            if (report) report->rejected.push_back({path, lineno, std::string("malformed JSON: ") + e.what()});
            continue;
        }
        T value;
        try {
            value = parse(j, path, lineno, report);
        } catch (const json::exception& e) {
            if (report) report->rejected.push_back({path, lineno, std::string("bad record: ") + e.what()});
            continue;
        } catch (const ValidationError& e) {
            if (report) report->rejected.push_back({path, lineno, e.what()});
            continue;
        }
        const std::string key = key_of(value);
        if (!keys.insert(key).second) {
            throw ValidationError(at(path, lineno) + "duplicate id \"" + key + "\"");
        }
        sink(std::move(value));
    }
}

}  // namespace

Catalog load_catalog(const std::string& games_path,
                     const std::string& large_users_path,
                     const std::string& bundles_path,
                     const Date& reference_date,
                     LoadReport* report) {
    Catalog catalog;
    catalog.reference_date = reference_date;

    load_jsonl<Game>(games_path, report, parse_game,
                     [](const Game& g) { return g.game_id; },
                     [&](Game&& g) { catalog.games.emplace(g.game_id, std::move(g)); });

    std::vector<std::pair<std::size_t, std::string>> user_lines;  // for error locations
    load_jsonl<UserLibrary>(large_users_path, report, parse_user,
                            [](const UserLibrary& u) { return u.user_id; },
                            [&](UserLibrary&& u) { catalog.large_users.push_back(std::move(u)); });

    load_jsonl<Bundle>(bundles_path, report, parse_bundle,
                       [](const Bundle& b) { return b.bundle_id; },
                       [&](Bundle&& b) { catalog.bundles.emplace(b.bundle_id, std::move(b)); });

    // Referential integrity is fatal once everything has been read, so all
    // dangling references get reported together.
    std::vector<std::string> dangling;
    for (const auto& u : catalog.large_users) {
        for (const auto& [gid, pt] : u.holdings) {
            (void)pt;
            if (!catalog.games.count(gid)) {
                dangling.push_back(large_users_path + ": user \"" + u.user_id +
                                   "\" references unknown game_id \"" + gid + "\"");
            }
        }
    }
    // Bundles re-scan the file to recover line numbers for the error message.
    {
        std::size_t lineno = 0;
        for (const auto& line : read_lines(bundles_path)) {
            ++lineno;
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("bundle_id") || !j.contains("items")) continue;
            const std::string bid = j.value("bundle_id", std::string());
            auto it = catalog.bundles.find(bid);
            if (it == catalog.bundles.end()) continue;
            for (const auto& gid : it->second.item_ids) {
                if (!catalog.games.count(gid)) {
                    dangling.push_back(at(bundles_path, lineno) + "bundle \"" + bid +
                                       "\" references unknown game_id \"" + gid + "\"");
                }
            }
        }
    }
    if (!dangling.empty()) {
        std::string msg = "dangling game references:";
        for (const auto& d : dangling) msg += "\n  " + d;
        throw ValidationError(msg);
    }
    return catalog;
}

namespace {

ordered_json game_to_json(const Game& g) {
    ordered_json j;
    j["game_id"] = g.game_id;
    j["title"] = g.title;
    j["tags"] = g.tags;
    j["genres"] = g.genres;
    j["specs"] = g.specs;
    j["price"] = g.price;
    j["release_date"] = g.release_date.to_string();
    if (g.developer) j["developer"] = *g.developer;
    if (g.sentiment) j["sentiment"] = *g.sentiment;
    return j;
}

ordered_json user_to_json(const UserLibrary& u) {
    ordered_json j;
    j["user_id"] = u.user_id;
    ordered_json items = ordered_json::array();
    for (const auto& [gid, pt] : u.holdings) {
        items.push_back(ordered_json{{"game_id", gid}, {"playtime_min", pt}});
    }
    j["items"] = std::move(items);
    return j;
}

ordered_json bundle_to_json(const Bundle& b) {
    ordered_json j;
    j["bundle_id"] = b.bundle_id;
    j["name"] = b.name;
    j["items"] = b.item_ids;
    j["price"] = b.price;
    j["discount_pct"] = b.discount_pct;
    j["purchasers"] = b.purchaser_ids;
    return j;
}

}  // namespace

std::string serialize_games(const Catalog& catalog) {
    std::string out;
    for (const auto& [id, g] : catalog.games) {
        (void)id;
        out += game_to_json(g).dump();
        out += '\n';
    }
    return out;
}

std::string serialize_users(const Catalog& catalog) {
    std::string out;
    for (const auto& u : catalog.large_users) {
        out += user_to_json(u).dump();
        out += '\n';
    }
    return out;
}

std::string serialize_bundles(const Catalog& catalog) {
    std::string out;
    for (const auto& [id, b] : catalog.bundles) {
        (void)id;
        out += bundle_to_json(b).dump();
        out += '\n';
    }
    return out;
}

void save_catalog(const Catalog& catalog,
                  const std::string& games_path,
                  const std::string& large_users_path,
                  const std::string& bundles_path) {
    atomic_write_file(games_path, serialize_games(catalog));
    atomic_write_file(large_users_path, serialize_users(catalog));
    atomic_write_file(bundles_path, serialize_bundles(catalog));
}

GameStatsMap compute_game_stats(const Catalog& catalog) {
    GameStatsMap stats;
    for (const auto& [id, g] : catalog.games) {
        GameStats s;
        s.game_id = id;
        s.age_years = std::max(0.0, years_between(g.release_date, catalog.reference_date));
        stats.emplace(id, std::move(s));
    }
    for (const auto& u : catalog.large_users) {
        for (const auto& [gid, pt] : u.holdings) {
            auto& s = stats.at(gid);
            s.total_playtime += pt;
            s.download_count += 1;
        }
    }
    for (auto& [id, s] : stats) {
        (void)id;
        s.playtime_per_download = static_cast<double>(s.total_playtime) /
                                  static_cast<double>(std::max<std::int64_t>(s.download_count, 1));
    }
    return stats;
}

}  // namespace bundlegen
