#include "bundlegen/text.hpp"

#include <cctype>
#include <sstream>

namespace bundlegen {

bool FieldSet::contains(ContentField f) const {
    switch (f) {
        case ContentField::Title: return title;
        case ContentField::Tags: return tags;
        case ContentField::Genres: return genres;
        case ContentField::Specs: return specs;
    }
    return false;
}

std::string FieldSet::to_string() const {
    std::string out;
    auto add = [&](const char* name) {
        if (!out.empty()) out += '+';
        out += name;
    };
    if (title) add("title");
    if (tags) add("tags");
    if (genres) add("genres");
    if (specs) add("specs");
    return out.empty() ? "none" : out;
}

FieldSet FieldSet::parse(const std::string& s) {
    FieldSet fs;
    std::string token;
    std::istringstream in(s);
    while (std::getline(in, token, '+')) {
        if (token == "title") fs.title = true;
        else if (token == "tags") fs.tags = true;
        else if (token == "genres") fs.genres = true;
        else if (token == "specs") fs.specs = true;
        else if (token == "none") continue;  // the empty set spells itself "none"
        else if (!token.empty()) throw ValidationError("unknown content field \"" + token + "\"");
    }
    return fs;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current += static_cast<char>(std::tolower(c));
        } else if (std::isspace(c)) {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
        }
        // punctuation is stripped, not treated as a separator
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

namespace {

void append_list_tokens(const std::vector<std::string>& entries, std::vector<std::string>& out) {
    for (const auto& entry : entries) {
        const auto words = tokenize(entry);
        out.insert(out.end(), words.begin(), words.end());
        if (words.size() > 1) {
            std::string joined;
            for (const auto& w : words) {
                if (!joined.empty()) joined += '_';
                joined += w;
            }
            out.push_back(joined);
        }
    }
}

}  // namespace

std::vector<std::string> field_tokens(const Game& game, const FieldSet& fields) {
    std::vector<std::string> out;
    if (fields.title) {
        const auto words = tokenize(game.title);
        out.insert(out.end(), words.begin(), words.end());
    }
    if (fields.tags) append_list_tokens(game.tags, out);
    if (fields.genres) append_list_tokens(game.genres, out);
    if (fields.specs) append_list_tokens(game.specs, out);
    return out;
}

std::vector<std::string> compose_text(const Game& game, const FieldSet& fields) {
    if (!fields.title) {
        throw ValidationError("content fields must include title");
    }
    return field_tokens(game, fields);
}

}  // namespace bundlegen
