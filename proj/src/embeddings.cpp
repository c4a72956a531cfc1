#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "bundlegen/embeddings.hpp"
#include "bundlegen/io.hpp"

namespace bundlegen {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) {
            if (start < text.size()) lines.push_back(text.substr(start));
            break;
        }
        std::string line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = end + 1;
    }
    return lines;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> parts;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ') ++j;
        if (j > i) parts.push_back(line.substr(i, j - i));
        i = j;
    }
    return parts;
}

double parse_double(const std::string& s, const std::string& where) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ValidationError(where + ": bad number \"" + s + "\"");
    if (!std::isfinite(value)) throw ValidationError(where + ": non-finite number");
    return value;
}

bool is_zero_vec(const Vec& v) {
    for (double x : v)
        if (x != 0.0) return false;
    return true;
}

void append_row_line(std::string& out, const std::string& id, const Vec& v) {
    out += id;
    for (double x : v) {
        out += ' ';
        out += format_double(x);
    }
    out += '\n';
}

Vec parse_row_values(const std::vector<std::string>& parts, std::size_t dim,
                     const std::string& where) {
    if (parts.size() != dim + 1)
        throw ValidationError(where + ": expected " + std::to_string(dim) +
                              " components, got " + std::to_string(parts.size() - 1));
    Vec v(dim);
    for (std::size_t d = 0; d < dim; ++d) v[d] = parse_double(parts[d + 1], where);
    return v;
}

}  // namespace

std::string to_string(EmbeddingSource s) {
    switch (s) {
        case EmbeddingSource::Content: return "content";
        case EmbeddingSource::Prod2Vec: return "prod2vec";
        case EmbeddingSource::MetaProd2Vec: return "metaprod2vec";
    }
    return "content";
}

EmbeddingSource parse_embedding_source(const std::string& s) {
    if (s == "content") return EmbeddingSource::Content;
    if (s == "prod2vec") return EmbeddingSource::Prod2Vec;
    if (s == "metaprod2vec") return EmbeddingSource::MetaProd2Vec;
    throw ValidationError("unknown embedding source \"" + s + "\"");
}

std::string WordVectorTable::serialize() const {
    std::string out = std::to_string(vectors.size()) + " " + std::to_string(dimension) + "\n";
    for (const auto& [token, v] : vectors) append_row_line(out, token, v);
    return out;
}

WordVectorTable WordVectorTable::deserialize(const std::string& text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw ValidationError("word vectors: empty input");
    const auto header = split_ws(lines[0]);
    if (header.size() != 2) throw ValidationError("word vectors: header must be \"V D\"");
    std::size_t count = 0, dim = 0;
    try {
        count = std::stoull(header[0]);
        dim = std::stoull(header[1]);
    } catch (const std::exception&) {
        throw ValidationError("word vectors: header must be \"V D\"");
    }
    if (dim == 0) throw ValidationError("word vectors: dimension must be positive");
    WordVectorTable table;
    table.dimension = dim;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto parts = split_ws(lines[i]);
        const std::string where = "word vectors line " + std::to_string(i + 1);
        if (parts.empty()) continue;
        Vec v = parse_row_values(parts, dim, where);
        if (!table.vectors.emplace(parts[0], std::move(v)).second)
            throw ValidationError(where + ": duplicate token \"" + parts[0] + "\"");
    }
    if (table.vectors.size() != count)
        throw ValidationError("word vectors: header declares " + std::to_string(count) +
                              " rows, found " + std::to_string(table.vectors.size()));
    return table;
}

WordVectorTable WordVectorTable::load(const std::string& path) {
    return deserialize(read_file(path));
}

void WordVectorTable::save(const std::string& path) const {
    atomic_write_file(path, serialize());
}

bool EmbeddingMatrix::embeddable(const std::string& game_id) const {
    const auto it = rows.find(game_id);
    return it != rows.end() && !is_zero_vec(it->second);
}

std::string EmbeddingMatrix::serialize() const {
    ordered_json header;
    header["source"] = to_string(config.source);
    header["fields"] = config.content_fields.to_string();
    header["meta_fields"] = config.meta_fields.to_string();
    header["dimension"] = dimension;
    header["window"] = config.window;
    header["negatives"] = config.negatives;
    header["epochs"] = config.epochs;
    header["learning_rate"] = config.learning_rate;
    header["seed"] = config.seed;
    header["exclude_unplayed"] = config.exclude_unplayed;
    header["flagged"] = std::vector<std::string>(flagged.begin(), flagged.end());
    std::string out = header.dump() + "\n";
    for (const auto& [id, v] : rows) append_row_line(out, id, v);
    return out;
}

EmbeddingMatrix EmbeddingMatrix::deserialize(const std::string& text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw ValidationError("embedding matrix: empty input");
    ordered_json header;
    try {
        header = ordered_json::parse(lines[0]);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("embedding matrix: bad header: ") + e.what());
    }
    if (!header.is_object()) throw ValidationError("embedding matrix: header must be an object");
    EmbeddingMatrix matrix;
    try {
        matrix.config.source = parse_embedding_source(header.at("source").get<std::string>());
        matrix.config.content_fields = FieldSet::parse(header.at("fields").get<std::string>());
        if (header.contains("meta_fields"))
            matrix.config.meta_fields = FieldSet::parse(header.at("meta_fields").get<std::string>());
        matrix.dimension = header.at("dimension").get<std::size_t>();
        matrix.config.dimension = matrix.dimension;
        if (header.contains("window")) matrix.config.window = header.at("window").get<std::size_t>();
        if (header.contains("negatives"))
            matrix.config.negatives = header.at("negatives").get<std::size_t>();
        if (header.contains("epochs")) matrix.config.epochs = header.at("epochs").get<std::size_t>();
        if (header.contains("learning_rate"))
            matrix.config.learning_rate = header.at("learning_rate").get<double>();
        if (header.contains("seed")) matrix.config.seed = header.at("seed").get<std::uint64_t>();
        if (header.contains("exclude_unplayed"))
            matrix.config.exclude_unplayed = header.at("exclude_unplayed").get<bool>();
        if (header.contains("flagged"))
            for (const auto& id : header.at("flagged"))
                matrix.flagged.insert(id.get<std::string>());
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError(std::string("embedding matrix: bad header: ") + e.what());
    }
    if (matrix.dimension == 0)
        throw ValidationError("embedding matrix: dimension must be positive");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto parts = split_ws(lines[i]);
        if (parts.empty()) continue;
        const std::string where = "embedding matrix line " + std::to_string(i + 1);
        Vec v = parse_row_values(parts, matrix.dimension, where);
        if (!matrix.rows.emplace(parts[0], std::move(v)).second)
            throw ValidationError(where + ": duplicate game \"" + parts[0] + "\"");
    }
    return matrix;
}

EmbeddingMatrix EmbeddingMatrix::load(const std::string& path) {
    return deserialize(read_file(path));
}

void EmbeddingMatrix::save(const std::string& path) const {
    atomic_write_file(path, serialize());
}

bool ReducedEmbedding::embeddable(const std::string& game_id) const {
    return rows.count(game_id) > 0;
}

std::string ReducedEmbedding::serialize() const {
    ordered_json header;
    header["parent_source"] = parent_source;
    header["parent_dimension"] = parent_dimension;
    header["captured_variance"] = captured_variance;
    header["mean"] = mean;
    header["projection"] = projection;
    std::string out = header.dump() + "\n";
    for (const auto& [id, v] : rows) append_row_line(out, id, v);
    return out;
}

ReducedEmbedding ReducedEmbedding::deserialize(const std::string& text) {
    const auto lines = split_lines(text);
    if (lines.empty()) throw ValidationError("reduced embedding: empty input");
    ordered_json header;
    try {
        header = ordered_json::parse(lines[0]);
        ReducedEmbedding reduced;
        reduced.parent_source = header.at("parent_source").get<std::string>();
        reduced.parent_dimension = header.at("parent_dimension").get<std::size_t>();
        reduced.captured_variance = header.at("captured_variance").get<double>();
        reduced.mean = header.at("mean").get<Vec>();
        reduced.projection = header.at("projection").get<std::vector<Vec>>();
        if (reduced.projection.size() != 2)
            throw ValidationError("reduced embedding: projection must have 2 rows");
        for (const auto& row : reduced.projection)
            if (row.size() != reduced.parent_dimension)
                throw ValidationError("reduced embedding: projection row length mismatch");
        if (reduced.mean.size() != reduced.parent_dimension)
            throw ValidationError("reduced embedding: mean length mismatch");
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            const auto parts = split_ws(lines[i]);
            if (parts.empty()) continue;
            const std::string where = "reduced embedding line " + std::to_string(i + 1);
            Vec v = parse_row_values(parts, 2, where);
            if (!reduced.rows.emplace(parts[0], std::move(v)).second)
                throw ValidationError(where + ": duplicate game \"" + parts[0] + "\"");
        }
        return reduced;
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception& e) {
        throw ValidationError(std::string("reduced embedding: bad header: ") + e.what());
    }
}

ReducedEmbedding ReducedEmbedding::load(const std::string& path) {
    return deserialize(read_file(path));
}

void ReducedEmbedding::save(const std::string& path) const {
    atomic_write_file(path, serialize());
}

namespace {

/// Game ids excluded from embedding rows/sentences: nobody ever played them.
std::set<std::string> unplayed_games(const Catalog& catalog) {
    std::set<std::string> unplayed;
    const GameStatsMap stats = compute_game_stats(catalog);
    for (const auto& [id, s] : stats)
        if (s.total_playtime <= 0) unplayed.insert(id);
    return unplayed;
}

}  // namespace

EmbeddingMatrix content_embedding(const Catalog& catalog, const WordVectorTable& table,
                                  const FieldSet& fields, const EmbeddingConfig& config) {
    if (table.vectors.empty())
        throw ValidationError("content embedding: empty word-vector table");
    if (!fields.contains(ContentField::Title))
        throw ValidationError("content embedding: fields must include title");
    EmbeddingMatrix matrix;
    matrix.config = config;
    matrix.config.source = EmbeddingSource::Content;
    matrix.config.content_fields = fields;
    matrix.config.dimension = table.dimension;
    matrix.dimension = table.dimension;
    std::set<std::string> skip;
    if (config.exclude_unplayed) skip = unplayed_games(catalog);
    std::size_t embedded = 0;
    for (const auto& [id, game] : catalog.games) {
        if (skip.count(id)) continue;
        Vec sum(table.dimension, 0.0);
        std::size_t hits = 0;
        for (const auto& token : compose_text(game, fields)) {
            const auto it = table.vectors.find(token);
            if (it == table.vectors.end()) continue;
            axpy(1.0, it->second, sum);
            ++hits;
        }
        if (hits == 0) {
            matrix.flagged.insert(id);
            matrix.rows.emplace(id, Vec(table.dimension, 0.0));
            continue;
        }
        for (auto& x : sum) x /= static_cast<double>(hits);
        sum = normalized(sum);
        if (is_zero_vec(sum))
            matrix.flagged.insert(id);
        else
            ++embedded;
        matrix.rows.emplace(id, std::move(sum));
    }
    if (embedded == 0)
        throw ValidationError("content embedding: every game is out of vocabulary");
    return matrix;
}

std::vector<std::vector<std::string>> purchase_sentences(const Catalog& catalog,
                                                         bool exclude_unplayed,
                                                         const FieldSet& meta_fields) {
    std::set<std::string> skip;
    if (exclude_unplayed) skip = unplayed_games(catalog);
    std::vector<std::vector<std::string>> sentences;
    sentences.reserve(catalog.large_users.size());
    for (const auto& user : catalog.large_users) {
        std::vector<std::pair<std::string, std::int64_t>> owned;
        owned.reserve(user.holdings.size());
        for (const auto& [game_id, playtime] : user.holdings) {
            if (!catalog.games.count(game_id)) continue;
            if (skip.count(game_id)) continue;
            owned.emplace_back(game_id, playtime);
        }
        std::sort(owned.begin(), owned.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        std::vector<std::string> sentence;
        for (const auto& [game_id, playtime] : owned) {
            sentence.push_back(game_id);
            if (!meta_fields.empty()) {
                const Game& game = catalog.games.at(game_id);
                for (const auto& token : field_tokens(game, meta_fields))
                    sentence.push_back("meta:" + token);
            }
        }
        sentences.push_back(std::move(sentence));
    }
    return sentences;
}

namespace {

EmbeddingMatrix matrix_from_table(const WordVectorTable& table, const Catalog& catalog,
                                  const EmbeddingConfig& config) {
    EmbeddingMatrix matrix;
    matrix.config = config;
    matrix.dimension = config.dimension;
    for (const auto& [token, v] : table.vectors) {
        if (token.rfind("meta:", 0) == 0) continue;
        if (!catalog.games.count(token)) continue;
        if (is_zero_vec(v)) matrix.flagged.insert(token);
        matrix.rows.emplace(token, v);
    }
    return matrix;
}

void require_multigame_user(const std::vector<std::vector<std::string>>& sentences,
                            const char* what) {
    for (const auto& sentence : sentences)
        if (sentence.size() >= 2) return;
    throw ValidationError(std::string(what) + ": no user holds at least two games");
}

}  // namespace

EmbeddingMatrix build_prod2vec(const Catalog& catalog, const EmbeddingConfig& config,
                               unsigned threads, SkipgramStats* stats) {
    auto sentences = purchase_sentences(catalog, config.exclude_unplayed);
    require_multigame_user(sentences, "prod2vec");
    EmbeddingConfig effective = config;
    effective.source = EmbeddingSource::Prod2Vec;
    const WordVectorTable table = train_skipgram(sentences, effective, threads, stats);
    return matrix_from_table(table, catalog, effective);
}

EmbeddingMatrix build_metaprod2vec(const Catalog& catalog, const EmbeddingConfig& config,
                                   const FieldSet& meta_fields,
                                   unsigned threads, SkipgramStats* stats) {
    auto sentences = purchase_sentences(catalog, config.exclude_unplayed, meta_fields);
    require_multigame_user(sentences, "metaprod2vec");
    EmbeddingConfig effective = config;
    effective.source = EmbeddingSource::MetaProd2Vec;
    effective.meta_fields = meta_fields;
    const WordVectorTable table = train_skipgram(sentences, effective, threads, stats);
    return matrix_from_table(table, catalog, effective);
}

WordVectorTable train_content_vectors(const Catalog& catalog, const EmbeddingConfig& config,
                                      unsigned threads, SkipgramStats* stats) {
    std::set<std::string> skip;
    if (config.exclude_unplayed) skip = unplayed_games(catalog);
    std::vector<std::vector<std::string>> sentences;
    for (const auto& [id, game] : catalog.games) {
        if (skip.count(id)) continue;
        sentences.push_back(compose_text(game, config.content_fields));
    }
    return train_skipgram(sentences, config, threads, stats);
}

ReducedEmbedding pca_reduce(const EmbeddingMatrix& matrix) {
    std::vector<const std::string*> ids;
    for (const auto& [id, v] : matrix.rows)
        if (!is_zero_vec(v)) ids.push_back(&id);
    const std::size_t n = ids.size();
    const std::size_t dim = matrix.dimension;
    if (dim < 2) throw ValidationError("pca: parent dimension must be at least 2");
    if (n < 3) throw ValidationError("pca: need at least 3 embeddable rows, have " +
                                     std::to_string(n));

    Vec mean(dim, 0.0);
    for (const auto* id : ids) axpy(1.0, matrix.rows.at(*id), mean);
    for (auto& x : mean) x /= static_cast<double>(n);

    std::vector<Vec> cov(dim, Vec(dim, 0.0));
    Vec centered(dim);
    for (const auto* id : ids) {
        const Vec& row = matrix.rows.at(*id);
        for (std::size_t d = 0; d < dim; ++d) centered[d] = row[d] - mean[d];
        for (std::size_t a = 0; a < dim; ++a)
            for (std::size_t b = a; b < dim; ++b) cov[a][b] += centered[a] * centered[b];
    }
    const double denom = static_cast<double>(n - 1);
    for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = a; b < dim; ++b) {
            cov[a][b] /= denom;
            cov[b][a] = cov[a][b];
        }

    const EigenResult eig = symmetric_eigen(cov);
    ReducedEmbedding reduced;
    reduced.parent_source = to_string(matrix.config.source);
    reduced.parent_dimension = dim;
    reduced.mean = mean;
    reduced.projection.resize(2);
    for (std::size_t c = 0; c < 2; ++c) {
        Vec pc = eig.vectors[c];
        std::size_t arg = 0;
        for (std::size_t d = 1; d < dim; ++d)
            if (std::fabs(pc[d]) > std::fabs(pc[arg])) arg = d;
        if (pc[arg] < 0.0)
            for (auto& x : pc) x = -x;
        reduced.projection[c] = std::move(pc);
    }
    double total = 0.0;
    for (double l : eig.values) total += std::max(l, 0.0);
    const double top2 = std::max(eig.values[0], 0.0) + std::max(eig.values[1], 0.0);
    reduced.captured_variance = total > 0.0 ? top2 / total : 0.0;

    for (const auto* id : ids) {
        const Vec& row = matrix.rows.at(*id);
        for (std::size_t d = 0; d < dim; ++d) centered[d] = row[d] - mean[d];
        reduced.rows.emplace(*id, Vec{dot(centered, reduced.projection[0]),
                                      dot(centered, reduced.projection[1])});
    }
    return reduced;
}

double cosine(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw ValidationError("cosine: length mismatch (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

Vec bundle_centroid(const Bundle& bundle, const EmbeddingMatrix& matrix) {
    Vec sum(matrix.dimension, 0.0);
    std::size_t count = 0;
    for (const auto& id : bundle.item_ids) {
        if (!matrix.embeddable(id)) continue;
        axpy(1.0, matrix.rows.at(id), sum);
        ++count;
    }
    if (count == 0)
        throw ValidationError("bundle \"" + bundle.bundle_id + "\": no embeddable members");
    for (auto& x : sum) x /= static_cast<double>(count);
    return sum;
}

}  // namespace bundlegen
