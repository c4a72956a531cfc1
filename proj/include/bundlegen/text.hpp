#ifndef BUNDLEGEN_TEXT_HPP
#define BUNDLEGEN_TEXT_HPP

#include <string>
#include <vector>

#include "bundlegen/types.hpp"

namespace bundlegen {

enum class ContentField { Title, Tags, Genres, Specs };

/// Ordered subset of the four content fields. Composition order is always
/// title, tags, genres, specs regardless of insertion order.
struct FieldSet {
    bool title = false;
    bool tags = false;
    bool genres = false;
    bool specs = false;

    static FieldSet all() { return {true, true, true, true}; }
    static FieldSet title_only() { return {true, false, false, false}; }

    bool contains(ContentField f) const;
    bool empty() const { return !title && !tags && !genres && !specs; }
    std::string to_string() const;  // e.g. "title+tags"
    static FieldSet parse(const std::string& s);
};

/// Lowercases, strips punctuation, splits on whitespace.
std::vector<std::string> tokenize(const std::string& text);

/// Tokens for the selected fields in fixed order. Multiword tags, genres and
/// specs additionally emit an underscore-joined single token ("Open World"
/// -> open, world, open_world). No title requirement; used for metadata
/// token streams as well as content text.
std::vector<std::string> field_tokens(const Game& game, const FieldSet& fields);

/// Content text for sentence-style embeddings; requires title in the set.
std::vector<std::string> compose_text(const Game& game, const FieldSet& fields);

}  // namespace bundlegen

#endif
