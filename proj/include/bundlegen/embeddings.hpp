#ifndef BUNDLEGEN_EMBEDDINGS_HPP
#define BUNDLEGEN_EMBEDDINGS_HPP

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bundlegen/catalog.hpp"
#include "bundlegen/linalg.hpp"
#include "bundlegen/text.hpp"
#include "bundlegen/types.hpp"

namespace bundlegen {

enum class EmbeddingSource { Content, Prod2Vec, MetaProd2Vec };

std::string to_string(EmbeddingSource s);
EmbeddingSource parse_embedding_source(const std::string& s);

struct EmbeddingConfig {
    EmbeddingSource source = EmbeddingSource::Content;
    FieldSet content_fields = FieldSet::all();  // must include title
    FieldSet meta_fields;                       // MetaProd2Vec side information
    std::size_t dimension = 64;
    std::size_t window = 5;
    std::size_t negatives = 5;
    std::size_t epochs = 5;
    double learning_rate = 0.025;
    std::uint64_t seed = 1;
    /// Drop games nobody has ever played before building embeddings.
    bool exclude_unplayed = true;
};

/// token -> dense vector; all vectors share `dimension`.
struct WordVectorTable {
    std::size_t dimension = 0;
    std::map<std::string, Vec> vectors;

    bool contains(const std::string& token) const { return vectors.count(token) > 0; }

    /// Text format: first line "V D", then one "token v1 ... vD" per line.
    std::string serialize() const;
    static WordVectorTable deserialize(const std::string& text);
    static WordVectorTable load(const std::string& path);
    void save(const std::string& path) const;
};

struct EmbeddingMatrix {
    EmbeddingConfig config;
    std::size_t dimension = 0;
    std::map<std::string, Vec> rows;   // game_id -> vector
    std::set<std::string> flagged;     // games with a degenerate (zero) vector

    /// A game usable for centroids, diversity and sampling: present with a
    /// nonzero vector.
    bool embeddable(const std::string& game_id) const;

    /// JSON header line {"source","fields","dimension",...} then rows as
    /// "game_id v1 ... vD" lines.
    std::string serialize() const;
    static EmbeddingMatrix deserialize(const std::string& text);
    static EmbeddingMatrix load(const std::string& path);
    void save(const std::string& path) const;
};

/// 2-D projection of an EmbeddingMatrix: rows = (parent - mean) * projection^T.
struct ReducedEmbedding {
    std::string parent_source;
    std::size_t parent_dimension = 0;
    std::vector<Vec> projection;  // 2 x D, orthonormal rows
    Vec mean;                     // length D
    std::map<std::string, Vec> rows;  // game_id -> 2-vector
    double captured_variance = 0.0;   // (l1+l2)/sum(l)

    bool embeddable(const std::string& game_id) const;

    std::string serialize() const;
    static ReducedEmbedding deserialize(const std::string& text);
    static ReducedEmbedding load(const std::string& path);
    void save(const std::string& path) const;
};

struct SkipgramStats {
    std::vector<double> epoch_loss;  // mean negative-sampling loss per epoch
    std::size_t pairs_per_epoch = 0;
    std::size_t vocabulary = 0;
};

/// Skip-gram with negative sampling over token sentences. Sentences with
/// fewer than two tokens are ignored entirely, so they change nothing.
/// Unigram^0.75 negative distribution, linear learning-rate decay to 1e-4 of
/// the initial rate. Deterministic for threads == 1.
WordVectorTable train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                               const EmbeddingConfig& config,
                               unsigned threads = 1,
                               SkipgramStats* stats = nullptr);

/// Game vectors as the L2-normalized mean of in-vocabulary token vectors of
/// compose_text(game, fields). Games with no in-vocabulary token get the
/// zero vector and are flagged.
EmbeddingMatrix content_embedding(const Catalog& catalog,
                                  const WordVectorTable& table,
                                  const FieldSet& fields,
                                  const EmbeddingConfig& config = {});

/// One sentence per user: their games in descending-playtime order
/// (game_id tie-break), trained with train_skipgram.
EmbeddingMatrix build_prod2vec(const Catalog& catalog, const EmbeddingConfig& config,
                               unsigned threads = 1, SkipgramStats* stats = nullptr);

/// Prod2Vec sentences with each game followed by its "meta:"-prefixed
/// metadata tokens; returned rows contain game ids only.
EmbeddingMatrix build_metaprod2vec(const Catalog& catalog, const EmbeddingConfig& config,
                                   const FieldSet& meta_fields,
                                   unsigned threads = 1, SkipgramStats* stats = nullptr);

/// Trains content word vectors on the composed texts of embeddable games.
WordVectorTable train_content_vectors(const Catalog& catalog, const EmbeddingConfig& config,
                                      unsigned threads = 1, SkipgramStats* stats = nullptr);

/// Top-2 principal components (mean-centered, eigenvectors of the covariance
/// matrix, signs fixed so each component's largest-magnitude loading is
/// positive).
ReducedEmbedding pca_reduce(const EmbeddingMatrix& matrix);

/// a.b / (|a||b|); 0 when either norm is 0. Throws on length mismatch.
double cosine(const Vec& a, const Vec& b);

/// Arithmetic mean of the embeddable members' vectors.
Vec bundle_centroid(const Bundle& bundle, const EmbeddingMatrix& matrix);

/// Sentences fed to build_prod2vec / build_metaprod2vec, exposed for tests.
std::vector<std::vector<std::string>> purchase_sentences(const Catalog& catalog,
                                                         bool exclude_unplayed,
                                                         const FieldSet& meta_fields = {});

}  // namespace bundlegen

#endif
