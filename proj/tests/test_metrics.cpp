#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "bundlegen/catalog.hpp"
#include "bundlegen/metrics.hpp"
#include "bundlegen/rng.hpp"
#include "oracles.hpp"

using namespace bundlegen;

namespace {

Bundle make_bundle(const std::string& id, std::vector<std::string> items) {
    Bundle b;
    b.bundle_id = id;
    b.name = id;
    b.item_ids = std::move(items);
    b.price = 1.0;
    return b;
}

UserLibrary make_user(const std::string& id,
                      std::map<std::string, std::int64_t> holdings) {
    UserLibrary u;
    u.user_id = id;
    u.holdings = std::move(holdings);
    return u;
}

/// Matrix with fixed hand-picked vectors; e1/e2 are orthogonal axes.
EmbeddingMatrix axis_matrix() {
    EmbeddingMatrix m;
    m.dimension = 2;
    m.rows["e1"] = {1.0, 0.0};
    m.rows["e2"] = {0.0, 1.0};
    m.rows["e1_long"] = {5.0, 0.0};       // same direction as e1, bigger norm
    m.rows["anti_e1"] = {-1.0, 0.0};
    m.rows["diag"] = {1.0, 1.0};
    m.rows["zero"] = {0.0, 0.0};          // flagged games carry a zero vector
    m.flagged.insert("zero");
    return m;
}

/// Pseudo-random unit vectors keyed by game id, for larger fixtures.
EmbeddingMatrix random_matrix(const std::vector<std::string>& ids, std::size_t dim,
                              std::uint64_t seed) {
    EmbeddingMatrix m;
    m.dimension = dim;
    Rng rng(seed);
    for (const auto& id : ids) {
        Rng sub = rng.substream(id);
        Vec v(dim);
        for (auto& x : v) x = sub.normal();
        m.rows[id] = normalized(v);
    }
    return m;
}

}  // namespace

TEST_CASE("metric names parse and round-trip") {
    for (Metric m : kAllMetrics) {
        CHECK(parse_metric(metric_name(m)) == m);
    }
    CHECK(metric_name(Metric::Pmb) == "P_mb");
    CHECK_THROWS_AS(parse_metric("Pmb"), ValidationError);
    CHECK(to_string(Category::Cat2) == "Cat2");
    CHECK(higher_is_better(Metric::PB));
    CHECK_FALSE(higher_is_better(Metric::N0));
}

TEST_CASE("explicit purchases count the purchaser set") {
    Bundle b = make_bundle("b", {"e1"});
    CHECK(explicit_purchases(b) == 0);
    b.purchaser_ids = {"u1", "u2", "u3"};
    CHECK(explicit_purchases(b) == 3);
}

TEST_CASE("implicit purchases use the strict 80% ownership rule") {
    Catalog c;
    for (const char* id : {"g1", "g2", "g3", "g4", "g5"}) {
        Game g;
        g.game_id = id;
        g.title = id;
        c.games.emplace(id, g);
    }
    c.large_users.push_back(make_user("owns5", {{"g1", 1}, {"g2", 0}, {"g3", 1},
                                                {"g4", 1}, {"g5", 1}}));
    c.large_users.push_back(make_user("owns4", {{"g1", 1}, {"g2", 1}, {"g3", 1},
                                                {"g4", 1}}));
    c.large_users.push_back(make_user("owns1", {{"g1", 9999}}));

    Bundle five = make_bundle("five", {"g1", "g2", "g3", "g4", "g5"});
    // 4 of 5 is exactly 80%, which the strict > excludes.
    CHECK(implicit_purchases(five, c) == 1);
    CHECK(implicit_purchases(five, c) == oracle::implicit_purchases(five, c));

    Bundle four = make_bundle("four", {"g1", "g2", "g3", "g4"});
    // owns5 and owns4 both hold all four members.
    CHECK(implicit_purchases(four, c) == 2);
    CHECK(implicit_purchases(four, c) == oracle::implicit_purchases(four, c));

    // Singleton bundle: ownership alone implies the purchase; playtime is
    // irrelevant, so this equals the download count.
    Bundle one = make_bundle("one", {"g1"});
    CHECK(implicit_purchases(one, c) == 3);

    Bundle empty = make_bundle("empty", {});
    CHECK_THROWS_AS(implicit_purchases(empty, c), ValidationError);
}

TEST_CASE("implicit purchases exhaustive boundary over small sizes") {
    // For every bundle size n in 1..10 and every ownership count k in 0..n,
    // membership must equal k > 0.8n exactly.
    for (int n = 1; n <= 10; ++n) {
        Catalog c;
        std::vector<std::string> ids;
        for (int i = 0; i < n; ++i) {
            Game g;
            g.game_id = "g" + std::to_string(i);
            g.title = g.game_id;
            c.games.emplace(g.game_id, g);
            ids.push_back(g.game_id);
        }
        Bundle b = make_bundle("b", ids);
        for (int k = 0; k <= n; ++k) {
            c.large_users.clear();
            std::map<std::string, std::int64_t> holdings;
            for (int i = 0; i < k; ++i) holdings[ids[i]] = 1;
            c.large_users.push_back(make_user("u", holdings));
            const bool expect = static_cast<double>(k) > 0.8 * n;
            CHECK(implicit_purchases(b, c) == (expect ? 1 : 0));
        }
    }
}

TEST_CASE("zero playtime and total playtime agree with raw-row recomputation") {
    Catalog c;
    for (const char* id : {"g1", "g2", "g3"}) {
        Game g;
        g.game_id = id;
        g.title = id;
        c.games.emplace(id, g);
    }
    c.large_users.push_back(make_user("u1", {{"g1", 100}, {"g2", 0}}));
    c.large_users.push_back(make_user("u2", {{"g1", 50}, {"g2", 0}, {"g3", 0}}));

    GameStatsMap stats = compute_game_stats(c);
    Bundle b = make_bundle("b", {"g1", "g2", "g3"});
    CHECK(zero_playtime_count(b, stats) == 2);
    CHECK(total_playtime(b, stats) == 150);
    CHECK(zero_playtime_count(b, stats) == oracle::zero_playtime_count(b, c));
    CHECK(total_playtime(b, stats) == oracle::total_playtime(b, c));

    Bundle dangling = make_bundle("d", {"missing"});
    CHECK_THROWS_AS(zero_playtime_count(dangling, stats), ValidationError);
    CHECK_THROWS_AS(total_playtime(dangling, stats), ValidationError);
}

TEST_CASE("diversity hand values") {
    EmbeddingMatrix m = axis_matrix();

    // Two orthogonal members: pair cosines are {1, 0, 0, 1} -> 1 - 2/4.
    CHECK(diversity(make_bundle("b", {"e1", "e2"}), m) == doctest::Approx(0.5));
    // Identical directions collapse to zero diversity, independent of norms.
    CHECK(diversity(make_bundle("b", {"e1", "e1_long"}), m) == doctest::Approx(0.0));
    // Opposite members cancel: cosines {1, -1, -1, 1} -> 1 - 0/4.
    CHECK(diversity(make_bundle("b", {"e1", "anti_e1"}), m) == doctest::Approx(1.0));
    // A single member is maximally non-diverse.
    CHECK(diversity(make_bundle("b", {"diag"}), m) == doctest::Approx(0.0));
    // 45-degree pair: cosines {1, c, c, 1} with c = 1/sqrt(2).
    const double c = 1.0 / std::sqrt(2.0);
    CHECK(diversity(make_bundle("b", {"e1", "diag"}), m) ==
          doctest::Approx((1.0 - c) / 2.0));
}

TEST_CASE("diversity ignores non-embeddable members and orderings") {
    EmbeddingMatrix m = axis_matrix();
    const double base = diversity(make_bundle("b", {"e1", "e2"}), m);
    CHECK(diversity(make_bundle("b", {"e1", "zero", "e2"}), m) == doctest::Approx(base));
    CHECK(diversity(make_bundle("b", {"e1", "unknown_game", "e2"}), m) ==
          doctest::Approx(base));
    CHECK(diversity(make_bundle("b", {"e2", "e1"}), m) == doctest::Approx(base));

    CHECK_THROWS_AS(diversity(make_bundle("b", {"zero", "unknown_game"}), m),
                    ValidationError);
}

TEST_CASE("diversity stays within [0, 2] and matches the double-loop oracle") {
    std::vector<std::string> ids;
    for (int i = 0; i < 30; ++i) ids.push_back("g" + std::to_string(i));
    EmbeddingMatrix m = random_matrix(ids, 6, 77);

    Rng rng(123);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> members;
        const std::size_t size = 1 + rng.uniform_index(8);
        std::vector<std::string> pool = ids;
        for (std::size_t i = 0; i < size; ++i) {
            const std::size_t pick = rng.uniform_index(pool.size());
            members.push_back(pool[pick]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        Bundle b = make_bundle("b", members);
        const double d = diversity(b, m);
        CHECK(d >= 0.0);
        CHECK(d <= 2.0);
        CHECK(d == doctest::Approx(oracle::diversity(b, m)).epsilon(1e-12));
    }
}

TEST_CASE("coverage hand value and single-bundle reduction") {
    EmbeddingMatrix m = axis_matrix();
    Bundle pair = make_bundle("pair", {"e1", "e2"});      // diversity 0.5, n = 2
    Bundle single = make_bundle("single", {"diag"});       // diversity 0, n = 1
    // 1 - (2 + 1) / (4 + 1)
    CHECK(coverage({&pair, &single}, m) == doctest::Approx(0.4));
    CHECK(coverage({&pair}, m) == doctest::Approx(diversity(pair, m)));
}

TEST_CASE("coverage equals the n^2-weighted mean of diversities") {
    std::vector<std::string> ids;
    for (int i = 0; i < 40; ++i) ids.push_back("g" + std::to_string(i));
    EmbeddingMatrix m = random_matrix(ids, 5, 31);

    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Bundle> bundles;
        const std::size_t count = 2 + rng.uniform_index(6);
        for (std::size_t k = 0; k < count; ++k) {
            std::vector<std::string> members;
            const std::size_t size = 1 + rng.uniform_index(6);
            for (std::size_t i = 0; i < size; ++i)
                members.push_back(ids[rng.uniform_index(ids.size())]);
            std::sort(members.begin(), members.end());
            members.erase(std::unique(members.begin(), members.end()), members.end());
            bundles.push_back(make_bundle("b" + std::to_string(k), members));
        }
        std::vector<const Bundle*> ptrs;
        for (const auto& b : bundles) ptrs.push_back(&b);

        double weighted = 0.0, weight = 0.0;
        for (const auto& b : bundles) {
            double n = 0;
            for (const auto& id : b.item_ids)
                if (m.embeddable(id)) n += 1.0;
            weighted += n * n * diversity(b, m);
            weight += n * n;
        }
        const double cov = coverage(ptrs, m);
        CHECK(cov == doctest::Approx(weighted / weight).epsilon(1e-12));
        CHECK(cov == doctest::Approx(oracle::coverage(ptrs, m)).epsilon(1e-12));
    }
}

TEST_CASE("coverage rejects empty or fully non-embeddable input") {
    EmbeddingMatrix m = axis_matrix();
    CHECK_THROWS_AS(coverage(std::vector<const Bundle*>{}, m), ValidationError);
    Bundle ghost = make_bundle("ghost", {"zero"});
    std::vector<const Bundle*> only_ghost{&ghost};
    CHECK_THROWS_AS(coverage(only_ghost, m), ValidationError);
    // Non-embeddable bundles are skipped, not fatal, when others exist.
    Bundle pair = make_bundle("pair", {"e1", "e2"});
    CHECK(coverage({&pair, &ghost}, m) == doctest::Approx(0.5));
}

TEST_CASE("oriented_value flips N0 only") {
    PopularityScores s;
    s.explicit_purchases = 3;
    s.implicit_purchases = 4;
    s.zero_playtime_count = 2;
    s.total_playtime = 500;
    s.diversity = 0.25;
    CHECK(metric_value(s, Metric::N0) == 2.0);
    CHECK(oriented_value(s, Metric::N0) == -2.0);
    for (Metric m : {Metric::Peb, Metric::Pmb, Metric::PB, Metric::D}) {
        CHECK(oriented_value(s, m) == metric_value(s, m));
    }
}

TEST_CASE("percentile cutoffs on 1..100 give a 60/20/20 split") {
    std::map<std::string, double> values;
    for (int i = 1; i <= 100; ++i) values["b" + std::to_string(i)] = i;
    PercentileCutoffs cut = compute_cutoffs(values, "PB");
    CHECK(cut.lower_value == 60.0);
    CHECK(cut.upper_value == 80.0);
    CHECK_FALSE(cut.degenerate);

    auto labels = categorize(values, cut);
    int c1 = 0, c2 = 0, c3 = 0;
    for (const auto& [id, cat] : labels) {
        (void)id;
        if (cat == Category::Cat1) ++c1;
        if (cat == Category::Cat2) ++c2;
        if (cat == Category::Cat3) ++c3;
    }
    CHECK(c1 == 60);
    CHECK(c2 == 20);
    CHECK(c3 == 20);
}

TEST_CASE("cutoff boundaries are inclusive on the low side") {
    PercentileCutoffs cut;
    cut.lower_value = 10.0;
    cut.upper_value = 20.0;
    CHECK(categorize_value(9.999, cut) == Category::Cat1);
    CHECK(categorize_value(10.0, cut) == Category::Cat1);
    CHECK(categorize_value(10.001, cut) == Category::Cat2);
    CHECK(categorize_value(20.0, cut) == Category::Cat2);
    CHECK(categorize_value(20.001, cut) == Category::Cat3);
}

TEST_CASE("nearest-rank percentiles match the reference on awkward sizes") {
    Rng rng(55);
    for (std::size_t n : {1u, 2u, 3u, 5u, 7u, 13u, 40u, 101u}) {
        std::map<std::string, double> values;
        std::vector<double> raw;
        for (std::size_t i = 0; i < n; ++i) {
            // Quantized so ties show up regularly.
            const double v = std::floor(rng.uniform_real() * 10.0);
            values["b" + std::to_string(i)] = v;
            raw.push_back(v);
        }
        PercentileCutoffs cut = compute_cutoffs(values, "x", 60.0, 80.0);
        CHECK(cut.lower_value == oracle::nearest_rank(raw, 60.0));
        CHECK(cut.upper_value == oracle::nearest_rank(raw, 80.0));
    }
}

TEST_CASE("degenerate population goes entirely to Cat1 with a warning") {
    std::map<std::string, double> values;
    for (int i = 0; i < 10; ++i) values["b" + std::to_string(i)] = 7.0;
    std::vector<std::string> warnings;
    PercentileCutoffs cut = compute_cutoffs(values, "P_eb", 60.0, 80.0, &warnings);
    CHECK(cut.degenerate);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("P_eb") != std::string::npos);
    CHECK(warnings[0].find("degenerate") != std::string::npos);
    for (const auto& [id, cat] : categorize(values, cut)) {
        (void)id;
        CHECK(cat == Category::Cat1);
    }
    // Even values outside the population collapse to Cat1.
    CHECK(categorize_value(1e9, cut) == Category::Cat1);
}

TEST_CASE("cutoff argument validation") {
    std::map<std::string, double> values{{"a", 1.0}};
    CHECK_THROWS_AS(compute_cutoffs({}, "x"), ValidationError);
    CHECK_THROWS_AS(compute_cutoffs(values, "x", 80.0, 60.0), ValidationError);
    CHECK_THROWS_AS(compute_cutoffs(values, "x", 0.0, 80.0), ValidationError);
    CHECK_THROWS_AS(compute_cutoffs(values, "x", 60.0, 100.0), ValidationError);
    CHECK_THROWS_AS(categorize({}, PercentileCutoffs{}), ValidationError);
}

TEST_CASE("compute_all_scores agrees with the oracles on a synthetic catalog") {
    SyntheticSpec spec;
    spec.seed = 21;
    spec.n_games = 60;
    spec.n_users = 20;
    spec.n_bundles = 12;
    Catalog c = generate_synthetic_catalog(spec);

    std::vector<std::string> ids;
    for (const auto& [gid, g] : c.games) {
        (void)g;
        ids.push_back(gid);
    }
    EmbeddingMatrix m = random_matrix(ids, 8, 4242);

    std::vector<std::string> warnings;
    auto scores = compute_all_scores(c, m, &warnings);
    CHECK(warnings.empty());
    REQUIRE(scores.size() == c.bundles.size());

    for (const auto& [bid, s] : scores) {
        const Bundle& b = c.bundles.at(bid);
        CHECK(s.explicit_purchases == oracle::explicit_purchases(b));
        CHECK(s.implicit_purchases == oracle::implicit_purchases(b, c));
        CHECK(s.zero_playtime_count == oracle::zero_playtime_count(b, c));
        CHECK(s.total_playtime == oracle::total_playtime(b, c));
        CHECK(s.diversity == doctest::Approx(oracle::diversity(b, m)).epsilon(1e-12));
    }
}

TEST_CASE("compute_all_scores skips bundles without embeddable members") {
    SyntheticSpec spec;
    spec.seed = 21;
    spec.n_games = 30;
    spec.n_users = 10;
    spec.n_bundles = 6;
    Catalog c = generate_synthetic_catalog(spec);

    // Only embed every other game; some bundle may lose all members.
    std::vector<std::string> ids;
    int k = 0;
    for (const auto& [gid, g] : c.games) {
        (void)g;
        if (k++ % 2 == 0) ids.push_back(gid);
    }
    EmbeddingMatrix m = random_matrix(ids, 4, 9);

    std::vector<std::string> warnings;
    auto scores = compute_all_scores(c, m, &warnings);
    CHECK(scores.size() + warnings.size() == c.bundles.size());
    for (const auto& w : warnings) {
        CHECK(w.find("skipped") != std::string::npos);
    }
}
