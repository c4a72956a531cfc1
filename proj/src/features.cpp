#include <algorithm>
#include <cmath>

#include "bundlegen/popmodel.hpp"

namespace bundlegen {

namespace {

std::vector<std::string> top_k(const std::map<std::string, std::int64_t>& freq, std::size_t k) {
    std::vector<std::pair<std::string, std::int64_t>> entries(freq.begin(), freq.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> names;
    names.reserve(std::min(k, entries.size()));
    for (const auto& [name, n] : entries) {
        if (names.size() == k) break;
        names.push_back(name);
    }
    return names;
}

bool purchases_masked(Metric target) {
    return target == Metric::Pmb || target == Metric::PB || target == Metric::N0;
}

}  // namespace

FeatureBuilder::FeatureBuilder(const Catalog& catalog, const ReducedEmbedding& reduced,
                               std::size_t top_tags, std::size_t top_genres,
                               std::size_t top_specs)
    : catalog_(&catalog), reduced_(&reduced), stats_(compute_game_stats(catalog)) {
    std::vector<int> sentiments;
    for (const auto& [id, game] : catalog.games) {
        for (const auto& t : game.tags) tag_freq_[t] += 1;
        for (const auto& g : game.genres) genre_freq_[g] += 1;
        for (const auto& s : game.specs) spec_freq_[s] += 1;
        if (game.sentiment) sentiments.push_back(*game.sentiment);
    }
    top_tags_ = top_k(tag_freq_, top_tags);
    top_genres_ = top_k(genre_freq_, top_genres);
    top_specs_ = top_k(spec_freq_, top_specs);
    if (!sentiments.empty()) {
        std::sort(sentiments.begin(), sentiments.end());
        const std::size_t n = sentiments.size();
        sentiment_median_ = n % 2 == 1
                                ? sentiments[n / 2]
                                : 0.5 * (sentiments[n / 2 - 1] + sentiments[n / 2]);
    }

    for (Metric target : kAllMetrics) {
        std::vector<std::string> names;
        if (target != Metric::D) {
            names.push_back("emb_mean_1");
            names.push_back("emb_mean_2");
        }
        names.push_back("bundle_price");
        names.push_back("bundle_age_years");
        names.push_back("discount_pct");
        for (const auto& t : top_tags_) names.push_back("tag:" + t);
        for (const auto& g : top_genres_) names.push_back("genre:" + g);
        for (const auto& s : top_specs_) names.push_back("spec:" + s);
        names.push_back("mean_sentiment");
        if (!purchases_masked(target)) {
            names.push_back("total_purchases");
            names.push_back("playtime_per_download_mean");
        }
        schemas_[static_cast<std::size_t>(target)] = std::move(names);
    }
}

const std::vector<std::string>& FeatureBuilder::schema(Metric target) const {
    return schemas_[static_cast<std::size_t>(target)];
}

namespace {

/// Most common value across member games; ties go to the catalog-wide more
/// frequent value, then lexicographically smaller.
std::string modal_value(const std::vector<const Game*>& members,
                        const std::vector<std::string> Game::*field,
                        const std::map<std::string, std::int64_t>& catalog_freq) {
    std::map<std::string, std::int64_t> counts;
    for (const Game* game : members)
        for (const auto& value : game->*field) counts[value] += 1;
    std::string best;
    std::int64_t best_count = 0, best_freq = 0;
    for (const auto& [value, count] : counts) {
        const auto it = catalog_freq.find(value);
        const std::int64_t freq = it == catalog_freq.end() ? 0 : it->second;
        if (count > best_count || (count == best_count && freq > best_freq)) {
            best = value;
            best_count = count;
            best_freq = freq;
        }
    }
    return best;  // empty when no member has the field
}

void one_hot(Vec& values, const std::vector<std::string>& vocabulary, const std::string& value) {
    for (const auto& name : vocabulary) values.push_back(name == value ? 1.0 : 0.0);
}

}  // namespace

FeatureVector FeatureBuilder::build(const Bundle& bundle, Metric target) const {
    if (bundle.item_ids.empty())
        throw ValidationError("bundle \"" + bundle.bundle_id + "\" is empty");
    std::vector<const Game*> members;
    members.reserve(bundle.item_ids.size());
    for (const auto& id : bundle.item_ids) {
        const auto it = catalog_->games.find(id);
        if (it == catalog_->games.end())
            throw ValidationError("bundle \"" + bundle.bundle_id + "\" references unknown game \"" +
                                  id + "\"");
        members.push_back(&it->second);
    }

    FeatureVector fv;
    fv.bundle_id = bundle.bundle_id;
    Vec& values = fv.values;
    values.reserve(schema(target).size());

    if (target != Metric::D) {
        double ex = 0.0, ey = 0.0;
        std::size_t embedded = 0;
        for (const auto& id : bundle.item_ids) {
            const auto it = reduced_->rows.find(id);
            if (it == reduced_->rows.end()) continue;
            ex += it->second[0];
            ey += it->second[1];
            ++embedded;
        }
        if (embedded == 0)
            throw ValidationError("bundle \"" + bundle.bundle_id + "\": no embeddable members");
        values.push_back(ex / static_cast<double>(embedded));
        values.push_back(ey / static_cast<double>(embedded));
    }

    values.push_back(bundle.price);

    double age_sum = 0.0, purchase_sum = 0.0, ppd_sum = 0.0, sentiment_sum = 0.0;
    for (const Game* game : members) {
        const GameStats& s = stats_.at(game->game_id);
        age_sum += s.age_years;
        purchase_sum += static_cast<double>(s.download_count);
        ppd_sum += s.playtime_per_download;
        sentiment_sum += game->sentiment ? static_cast<double>(*game->sentiment)
                                         : sentiment_median_;
    }
    const double n = static_cast<double>(members.size());
    values.push_back(age_sum / n);
    values.push_back(bundle.discount_pct);

    one_hot(values, top_tags_, modal_value(members, &Game::tags, tag_freq_));
    one_hot(values, top_genres_, modal_value(members, &Game::genres, genre_freq_));
    one_hot(values, top_specs_, modal_value(members, &Game::specs, spec_freq_));

    values.push_back(sentiment_sum / n);
    if (!purchases_masked(target)) {
        values.push_back(purchase_sum);
        values.push_back(ppd_sum / n);
    }

    if (values.size() != schema(target).size())
        throw Error("feature vector length mismatch for bundle \"" + bundle.bundle_id + "\"");
    if (!all_finite(values))
        throw ValidationError("bundle \"" + bundle.bundle_id + "\": non-finite feature");
    return fv;
}

}  // namespace bundlegen
