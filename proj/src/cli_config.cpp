#include <thread>

#include "json.hpp"

#include "bundlegen/cli.hpp"
#include "bundlegen/io.hpp"

namespace bundlegen {

unsigned CliOptions::effective_threads() const {
    if (threads > 0) return threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

Date CliOptions::parsed_reference_date() const { return Date::parse(reference_date); }

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void unknown_key(const std::string& section, const std::string& key) {
    const std::string where = section.empty() ? key : section + "." + key;
    throw ValidationError("config: unknown key \"" + where + "\"");
}

template <typename T>
void read_into(const ordered_json& j, const std::string& section, const std::string& key,
               T& out) {
    try {
        out = j.get<T>();
    } catch (const std::exception&) {
        const std::string where = section.empty() ? key : section + "." + key;
        throw ValidationError("config: bad value for \"" + where + "\"");
    }
}

void apply_embedding(const ordered_json& j, CliOptions& o) {
    for (const auto& [key, value] : j.items()) {
        if (key == "source") read_into(value, "embedding", key, o.embedding_source);
        else if (key == "fields") read_into(value, "embedding", key, o.fields);
        else if (key == "meta_fields") read_into(value, "embedding", key, o.meta_fields);
        else if (key == "dimension") read_into(value, "embedding", key, o.embedding.dimension);
        else if (key == "window") read_into(value, "embedding", key, o.embedding.window);
        else if (key == "negatives") read_into(value, "embedding", key, o.embedding.negatives);
        else if (key == "epochs") read_into(value, "embedding", key, o.embedding.epochs);
        else if (key == "learning_rate")
            read_into(value, "embedding", key, o.embedding.learning_rate);
        else if (key == "exclude_unplayed")
            read_into(value, "embedding", key, o.embedding.exclude_unplayed);
        else if (key == "vectors") read_into(value, "embedding", key, o.pretrained_vectors);
        else unknown_key("embedding", key);
    }
}

void apply_synth(const ordered_json& j, CliOptions& o) {
    for (const auto& [key, value] : j.items()) {
        if (key == "games") read_into(value, "synth", key, o.synth.n_games);
        else if (key == "users") read_into(value, "synth", key, o.synth.n_users);
        else if (key == "bundles") read_into(value, "synth", key, o.synth.n_bundles);
        else if (key == "clusters") read_into(value, "synth", key, o.synth.cluster_count);
        else unknown_key("synth", key);
    }
}

void apply_train(const ordered_json& j, CliOptions& o) {
    for (const auto& [key, value] : j.items()) {
        if (key == "target") read_into(value, "train", key, o.target);
        else if (key == "l2") read_into(value, "train", key, o.train.l2);
        else if (key == "epochs") read_into(value, "train", key, o.train.max_epochs);
        else if (key == "learning_rate") read_into(value, "train", key, o.train.learning_rate);
        else if (key == "tol") read_into(value, "train", key, o.train.tol);
        else if (key == "train_frac") read_into(value, "train", key, o.train_frac);
        else unknown_key("train", key);
    }
}

void apply_optimize(const ordered_json& j, CliOptions& o) {
    for (const auto& [key, value] : j.items()) {
        if (key == "strategy") {
            std::string s;
            read_into(value, "optimize", key, s);
            o.opt.strategy = parse_strategy(s);
        } else if (key == "objective") {
            read_into(value, "optimize", key, o.opt.objective);
        } else if (key == "score_mode") {
            std::string s;
            read_into(value, "optimize", key, s);
            o.opt.mode = parse_scoring_mode(s);
        } else if (key == "pool") {
            std::string s;
            read_into(value, "optimize", key, s);
            o.opt.pool = parse_pool(s);
        } else if (key == "iters") {
            read_into(value, "optimize", key, o.opt.max_iters);
        } else if (key == "temp") {
            read_into(value, "optimize", key, o.opt.temperature);
        } else if (key == "removal_prob") {
            read_into(value, "optimize", key, o.opt.removal_prob);
        } else if (key == "min_size") {
            read_into(value, "optimize", key, o.opt.min_size);
        } else if (key == "max_size") {
            read_into(value, "optimize", key, o.opt.max_size);
        } else if (key == "reps") {
            read_into(value, "optimize", key, o.reps);
        } else {
            unknown_key("optimize", key);
        }
    }
}

}  // namespace

void apply_config_file(const std::string& path, CliOptions& options) {
    ordered_json j;
    try {
        j = ordered_json::parse(read_file(path));
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError("config " + path + ": bad JSON: " + e.what());
    }
    if (!j.is_object()) throw ValidationError("config " + path + ": top level must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key == "out") read_into(value, "", key, options.out);
        else if (key == "seed") read_into(value, "", key, options.seed);
        else if (key == "threads") read_into(value, "", key, options.threads);
        else if (key == "reference_date") read_into(value, "", key, options.reference_date);
        else if (key == "games") read_into(value, "", key, options.games_path);
        else if (key == "users") read_into(value, "", key, options.users_path);
        else if (key == "bundles") read_into(value, "", key, options.bundles_path);
        else if (key == "embedding") apply_embedding(value, options);
        else if (key == "synth") apply_synth(value, options);
        else if (key == "train") apply_train(value, options);
        else if (key == "optimize") apply_optimize(value, options);
        else unknown_key("", key);
    }
    // Surface bad values at load time, not at first use.
    options.parsed_reference_date();
    parse_embedding_source(options.embedding_source);
    FieldSet::parse(options.fields);
    FieldSet::parse(options.meta_fields);
}

}  // namespace bundlegen
