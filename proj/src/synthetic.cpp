#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <vector>

#include "bundlegen/catalog.hpp"
#include "bundlegen/rng.hpp"

namespace bundlegen {

namespace {

std::string padded_id(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
    return buf;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

// Draws k distinct indices, probability proportional to weight, renormalizing
// after each draw.
std::vector<std::size_t> weighted_sample(const std::vector<double>& weights,
                                         std::size_t k, Rng& rng) {
    std::vector<double> w = weights;
    std::vector<std::size_t> picked;
    k = std::min(k, w.size());
    for (std::size_t draw = 0; draw < k; ++draw) {
        double total = std::accumulate(w.begin(), w.end(), 0.0);
        if (total <= 0.0) break;
        double x = rng.uniform_real() * total;
        std::size_t chosen = w.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            acc += w[i];
            if (x < acc) {
                chosen = i;
                break;
            }
        }
        picked.push_back(chosen);
        w[chosen] = 0.0;
    }
    return picked;
}

struct PlantedGame {
    std::string id;
    std::size_t cluster = 0;
    std::size_t rank = 0;  // popularity rank within the cluster, 0 = most popular
    bool dead = false;     // never played by anyone
};

}  // namespace

int synthetic_cluster_of(const Game& game) {
    for (const auto& g : game.genres) {
        if (g.rfind("cluster", 0) == 0) {
            try {
                return std::stoi(g.substr(7));
            } catch (...) {
                return -1;
            }
        }
    }
    return -1;
}

Catalog generate_synthetic_catalog(const SyntheticSpec& spec) {
    if (spec.n_games < 1 || spec.n_users < 1 || spec.n_bundles < 1 || spec.cluster_count < 1) {
        throw ValidationError("synthetic catalog: all counts must be >= 1");
    }
    if (spec.cluster_count > spec.n_games) {
        throw ValidationError("synthetic catalog: cluster_count (" +
                              std::to_string(spec.cluster_count) + ") exceeds n_games (" +
                              std::to_string(spec.n_games) + ")");
    }

    Rng rng(spec.seed);
    Catalog catalog;
    catalog.reference_date = Date{2023, 8, 30};

    const std::size_t clusters = spec.cluster_count;

    // ---- games ---------------------------------------------------------
    std::vector<PlantedGame> planted(spec.n_games);
    std::vector<std::size_t> cluster_size(clusters, 0);
    for (std::size_t i = 0; i < spec.n_games; ++i) {
        planted[i].id = padded_id("g", i, 4);
        planted[i].cluster = i % clusters;
        planted[i].rank = i / clusters;
        cluster_size[planted[i].cluster] += 1;
    }
    for (auto& pg : planted) {
        const std::size_t csize = cluster_size[pg.cluster];
        // The bottom tenth of large clusters is planted as never-played.
        pg.dead = csize >= 8 && pg.rank * 10 >= csize * 9;
    }

    for (std::size_t i = 0; i < spec.n_games; ++i) {
        const PlantedGame& pg = planted[i];
        Game g;
        g.game_id = pg.id;

        const std::size_t c = pg.cluster;
        const std::size_t title_words = 2 + rng.uniform_index(2);
        std::string title;
        for (std::size_t w = 0; w < title_words; ++w) {
            if (w) title += ' ';
            title += "word" + std::to_string(c) + "x" + std::to_string(rng.uniform_index(12));
        }
        g.title = title;

        const std::size_t n_tags = 2 + rng.uniform_index(3);
        std::set<std::string> tagset;
        while (tagset.size() < n_tags) {
            tagset.insert("tag" + std::to_string(c) + "_" + std::to_string(rng.uniform_index(6)));
        }
        if (rng.bernoulli(0.2)) tagset.insert("tag_shared");
        g.tags.assign(tagset.begin(), tagset.end());

        g.genres = {"cluster" + std::to_string(c)};

        const std::size_t n_specs = 1 + rng.uniform_index(3);
        std::set<std::string> specset;
        while (specset.size() < n_specs) {
            specset.insert("spec" + std::to_string(rng.uniform_index(8)));
        }
        g.specs.assign(specset.begin(), specset.end());

        g.price = round2(3.0 + 47.0 * rng.uniform_real());
        g.release_date = Date{2008 + static_cast<int>(rng.uniform_index(15)),
                              1 + static_cast<int>(rng.uniform_index(12)),
                              1 + static_cast<int>(rng.uniform_index(28))};
        if (rng.bernoulli(0.8)) {
            g.developer = "dev" + std::to_string(c * 3 + rng.uniform_index(3));
        }

        // Sentiment tracks within-cluster popularity; dead games are panned.
        const double frac = cluster_size[c] > 1
                                ? static_cast<double>(pg.rank) / static_cast<double>(cluster_size[c] - 1)
                                : 0.0;
        int sentiment;
        if (pg.dead) sentiment = 1;
        else if (frac < 0.3) sentiment = 5;
        else if (frac < 0.6) sentiment = 3;
        else sentiment = 2;
        if (rng.bernoulli(0.07)) {
            g.sentiment.reset();  // missing, imputed downstream
        } else {
            g.sentiment = sentiment;
        }

        catalog.games.emplace(g.game_id, std::move(g));
    }

    // Per-cluster index of alive/dead games, in rank order.
    std::vector<std::vector<std::size_t>> alive_in(clusters), dead_in(clusters);
    for (std::size_t i = 0; i < spec.n_games; ++i) {
        (planted[i].dead ? dead_in : alive_in)[planted[i].cluster].push_back(i);
    }
    for (std::size_t c = 0; c < clusters; ++c) {
        if (alive_in[c].empty()) {
            // Tiny degenerate cluster; resurrect one game so every cluster is usable.
            alive_in[c].push_back(dead_in[c].front());
            planted[dead_in[c].front()].dead = false;
            dead_in[c].erase(dead_in[c].begin());
        }
    }

    auto rank_weight = [&](std::size_t game_index, double exponent) {
        return std::pow(1.0 + static_cast<double>(planted[game_index].rank), -exponent);
    };

    // ---- users ----------------------------------------------------------
    for (std::size_t i = 0; i < spec.n_users; ++i) {
        UserLibrary u;
        u.user_id = padded_id("u", i, 3);
        const std::size_t home = i % clusters;
        const auto& alive = alive_in[home];  // rank order

        std::size_t m = 6 + rng.uniform_index(10);  // 6..15 holdings
        m = std::min(m, alive.size());
        // Everyone owns their cluster's top-popularity prefix; the rest is a
        // power-law draw over the tail. The shared prefix is what lets
        // star bundles accumulate implicit (own-most-of-it) purchasers.
        const std::size_t n_prefix = (m * 7 + 9) / 10;  // ceil(0.7 m)
        std::vector<std::size_t> picks(alive.begin(), alive.begin() + n_prefix);
        std::vector<double> weights(alive.size(), 0.0);
        for (std::size_t k = n_prefix; k < alive.size(); ++k) {
            weights[k] = rank_weight(alive[k], 1.0);
        }
        for (std::size_t pick : weighted_sample(weights, m - n_prefix, rng)) {
            picks.push_back(alive[pick]);
        }
        for (std::size_t gi : picks) {
            const PlantedGame& pg = planted[gi];
            std::int64_t playtime;
            if (rng.bernoulli(0.08)) {
                playtime = 0;  // bought, never launched
            } else {
                const double scale = 2000.0 * rank_weight(gi, 1.0);
                playtime = std::max<std::int64_t>(
                    1, static_cast<std::int64_t>(std::llround(scale * std::exp(0.8 * rng.normal()))));
            }
            u.holdings[pg.id] = playtime;
        }
        // One cross-cluster pick keeps per-user cluster purity above 80%.
        if (clusters > 1) {
            std::size_t other = rng.uniform_index(clusters - 1);
            if (other >= home) ++other;
            // Half the cross picks land on dead games so those stay at zero playtime.
            const bool pick_dead = !dead_in[other].empty() && rng.bernoulli(0.5);
            const auto& pool = pick_dead ? dead_in[other] : alive_in[other];
            const std::size_t gi = pool[rng.uniform_index(pool.size())];
            u.holdings[planted[gi].id] =
                pick_dead ? 0 : 1 + static_cast<std::int64_t>(rng.uniform_index(120));
        }
        catalog.large_users.push_back(std::move(u));
    }

    // Ownership sets, used below to plant realistic purchase counts.
    std::vector<std::set<std::string>> owned(spec.n_users);
    for (std::size_t ui = 0; ui < spec.n_users; ++ui) {
        for (const auto& [gid, pt] : catalog.large_users[ui].holdings) {
            (void)pt;
            owned[ui].insert(gid);
        }
    }

    // Games with any recorded playtime, per cluster in rank order. Bundle
    // tiers pick from these so the planted zero-playtime counts stay exact.
    std::map<std::string, std::int64_t> total_pt;
    for (const auto& u : catalog.large_users) {
        for (const auto& [gid, pt] : u.holdings) total_pt[gid] += pt;
    }
    std::vector<std::vector<std::size_t>> played_in(clusters);
    std::vector<std::size_t> played_all;
    for (std::size_t c = 0; c < clusters; ++c) {
        for (std::size_t gi : alive_in[c]) {
            if (total_pt[planted[gi].id] > 0) {
                played_in[c].push_back(gi);
                played_all.push_back(gi);
            }
        }
        if (played_in[c].empty()) played_in[c] = alive_in[c];  // tiny-spec fallback
    }
    if (played_all.empty()) {
        for (std::size_t c = 0; c < clusters; ++c)
            played_all.insert(played_all.end(), alive_in[c].begin(), alive_in[c].end());
    }

    // ---- bundles --------------------------------------------------------
    // Even indices are cluster-coherent and tiered star/mid/cold; odd indices
    // are cross-cluster junk. The tiers plant three distinct blocks per
    // metric so the 60/80 percentile cutoffs always separate.
    for (std::size_t i = 0; i < spec.n_bundles; ++i) {
        Bundle b;
        b.bundle_id = padded_id("b", i, 3);
        const bool coherent = i % 2 == 0;

        std::set<std::string> chosen;
        auto take_weighted = [&](const std::vector<std::size_t>& pool, std::size_t count,
                                 double exponent) {
            std::vector<double> weights(pool.size());
            for (std::size_t k = 0; k < pool.size(); ++k) {
                weights[k] = std::pow(1.0 + static_cast<double>(planted[pool[k]].rank), -exponent);
            }
            for (std::size_t pick : weighted_sample(weights, count, rng)) {
                chosen.insert(planted[pool[pick]].id);
            }
        };
        auto take_dead = [&](std::size_t c, std::size_t count) {
            std::vector<double> weights(dead_in[c].size(), 1.0);
            for (std::size_t pick : weighted_sample(weights, count, rng)) {
                chosen.insert(planted[dead_in[c][pick]].id);
            }
        };

        if (coherent) {
            const std::size_t c = (i / 2) % clusters;
            const std::size_t tier = (i / 2) % 3;
            const auto& played = played_in[c];
            if (tier == 0) {
                // Star bundle: three games from the cluster's very top.
                std::vector<std::size_t> top(played.begin(),
                                             played.begin() + std::min<std::size_t>(4, played.size()));
                take_weighted(top, 3, 2.0);
            } else if (tier == 1) {
                // Mid bundle: five well-owned games plus one dead one. Owning
                // the five live members is > 80% of six, so the mid tier still
                // collects implicit purchasers, just fewer of them.
                std::vector<std::size_t> head(played.begin(),
                                              played.begin() + std::min<std::size_t>(9, played.size()));
                take_weighted(head, 5, 1.0);
                take_dead(c, 1);
            } else {
                // Cold bundle: anything from the cluster plus two dead games.
                take_weighted(alive_in[c], 4, 0.0);
                take_dead(c, 2);
            }
            b.name = "bundle " + std::to_string(i) + " cluster" + std::to_string(c);
        } else {
            // Junk bundle: unpopular cross-cluster mix. The first member has
            // recorded playtime so every bundle stays embeddable; two dead
            // members keep the zero-playtime count high.
            const std::size_t size = 3 + rng.uniform_index(4);
            take_weighted(played_all, 1, -0.5);  // tail-biased
            for (std::size_t k = 0; k < 2 && chosen.size() < size; ++k) {
                const std::size_t c = rng.uniform_index(clusters);
                if (!dead_in[c].empty()) take_dead(c, 1);
            }
            while (chosen.size() < size) {
                const std::size_t c = rng.uniform_index(clusters);
                const bool want_dead = !dead_in[c].empty() && rng.bernoulli(0.4);
                if (want_dead) {
                    take_dead(c, 1);
                } else {
                    take_weighted(alive_in[c], 1, -0.5);
                }
            }
            b.name = "bundle " + std::to_string(i) + " mixed";
        }
        std::vector<std::string> items(chosen.begin(), chosen.end());
        b.item_ids = std::move(items);

        double base = 0.0;
        for (const auto& gid : b.item_ids) base += catalog.games.at(gid).price;
        b.discount_pct = static_cast<double>(10 + rng.uniform_index(31));
        b.price = round2(base * (1.0 - b.discount_pct / 100.0));

        // Explicit purchases correlate with how many users already own the
        // bundle contents, which keeps the planted popularity consistent.
        const std::size_t n = b.item_ids.size();
        for (std::size_t ui = 0; ui < spec.n_users; ++ui) {
            std::size_t owned_count = 0;
            for (const auto& gid : b.item_ids) owned_count += owned[ui].count(gid);
            const bool implicit_owner = 5 * owned_count > 4 * n;
            if (implicit_owner && rng.bernoulli(0.75)) {
                b.purchaser_ids.insert(catalog.large_users[ui].user_id);
            }
        }
        if (!coherent && rng.bernoulli(0.2)) {
            b.purchaser_ids.insert(catalog.large_users[rng.uniform_index(spec.n_users)].user_id);
        }

        catalog.bundles.emplace(b.bundle_id, std::move(b));
    }

    return catalog;
}

}  // namespace bundlegen
