#pragma once

// Documents, tokenization and word-vector lookup.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gradproj/ad/graph.hpp"

namespace gradproj::corpus {

struct Document {
    std::string id;
    std::string text;
    std::optional<std::string> label;
};

inline constexpr std::size_t kOutOfVocabulary = static_cast<std::size_t>(-1);

struct Token {
    std::string word;             // lowercase surface form
    std::size_t position = 0;     // 0-based, contiguous after drops
    std::size_t vector_id = kOutOfVocabulary;
};

struct TokenSequence {
    std::string doc_id;
    std::vector<Token> tokens;
};

using StopwordSet = std::unordered_set<std::string>;

class WordVectorTable {
public:
    explicit WordVectorTable(std::size_t dimension = 0) : dimension_(dimension) {}

    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return words_.size(); }

    // Adds a word (lowercased). Throws DataError on a duplicate or a length
    // mismatch.
    void add(std::string word, std::vector<double> values);

    std::optional<std::size_t> find(std::string_view word) const;
    const std::string& word(std::size_t id) const { return words_[id]; }
    std::span<const double> vector(std::size_t id) const {
        return {values_.data() + id * dimension_, dimension_};
    }

private:
    std::size_t dimension_;
    std::vector<std::string> words_;
    std::vector<double> values_;
    std::unordered_map<std::string, std::size_t> index_;
};

enum class OovPolicy { skip, zero_vector };

// A document's surviving tokens registered as one d x e differentiable leaf.
// Row i of `words` belongs to tokens[i]; alignment[i] is that token's index
// in the original TokenSequence.
struct ResolvedDocument {
    std::string doc_id;
    ad::Value words;
    std::vector<Token> tokens;
    std::vector<std::size_t> alignment;
};

// JSON Lines: one {"id", "text", "label"?} object per line. Blank lines are
// ignored.
std::vector<Document> load_corpus(const std::filesystem::path& path);
std::vector<Document> parse_corpus(std::string_view content);

// Lowercase, split on runs of non-alphanumeric characters, drop tokens shorter
// than two characters and stopwords, then renumber positions. Bytes >= 0x80
// count as word characters so UTF-8 words stay whole.
TokenSequence tokenize(const Document& doc, const StopwordSet* stopwords = nullptr);

// One "word v1 ... ve" entry per line; e comes from the first line.
WordVectorTable load_word_vectors(const std::filesystem::path& path);
WordVectorTable parse_word_vectors(std::string_view content);

// One word per line, lowercased; blank lines ignored.
StopwordSet load_stopwords(const std::filesystem::path& path);

// Fills in each token's vector_id from the table.
TokenSequence attach_vocabulary(TokenSequence seq, const WordVectorTable& table);

ResolvedDocument resolve(const TokenSequence& seq, const WordVectorTable& table, OovPolicy policy, ad::Graph& graph);

std::string_view to_string(OovPolicy policy);
OovPolicy parse_oov_policy(std::string_view text);

}  // namespace gradproj::corpus
