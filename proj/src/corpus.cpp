#include "gradproj/corpus.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "gradproj/errors.hpp"

namespace gradproj::corpus {
namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Calls fn(line, 1-based line number) for every line of `content`.
template <typename Fn>
void for_each_line(std::string_view content, Fn fn) {
    std::size_t line_no = 0;
    while (!content.empty()) {
        const std::size_t end = content.find('\n');
        std::string_view line = content.substr(0, end);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        fn(line, ++line_no);
        if (end == std::string_view::npos) break;
        content.remove_prefix(end + 1);
    }
}

bool is_blank(std::string_view line) { return line.find_first_not_of(" \t") == std::string_view::npos; }

bool is_word_byte(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

std::size_t code_points(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

}  // namespace

void WordVectorTable::add(std::string word, std::vector<double> values) {
    word = lowercase(word);
    if (values.size() != dimension_) {
        throw DataError("word '" + word + "' has " + std::to_string(values.size()) + " values, expected " +
                        std::to_string(dimension_));
    }
    if (index_.contains(word)) throw DataError("duplicate word '" + word + "'");
    index_.emplace(word, words_.size());
    words_.push_back(std::move(word));
    values_.insert(values_.end(), values.begin(), values.end());
}

std::optional<std::size_t> WordVectorTable::find(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<Document> parse_corpus(std::string_view content) {
    std::vector<Document> docs;
    std::unordered_map<std::string, std::size_t> seen;  // id -> line
    for_each_line(content, [&](std::string_view line, std::size_t line_no) {
        if (is_blank(line)) return;
        const std::string where = " at line " + std::to_string(line_no);
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw DataError("malformed JSON" + where);
        }
        if (!obj.is_object()) throw DataError("expected a JSON object" + where);
        for (const char* field : {"id", "text"}) {
            if (!obj.contains(field)) throw DataError(std::string("missing field ") + field + where);
            if (!obj[field].is_string()) throw DataError(std::string("field ") + field + " must be a string" + where);
        }
        Document doc;
        doc.id = obj["id"].get<std::string>();
        doc.text = obj["text"].get<std::string>();
        if (doc.id.empty()) throw DataError("empty id" + where);
        if (doc.text.empty()) throw DataError("empty text" + where);
        if (obj.contains("label") && !obj["label"].is_null()) {
            if (!obj["label"].is_string()) throw DataError("field label must be a string" + where);
            doc.label = obj["label"].get<std::string>();
        }
        if (auto it = seen.find(doc.id); it != seen.end()) {
            throw DataError("duplicate id '" + doc.id + "' at lines " + std::to_string(it->second) + " and " +
                            std::to_string(line_no));
        }
        seen.emplace(doc.id, line_no);
        docs.push_back(std::move(doc));
    });
    return docs;
}

std::vector<Document> load_corpus(const std::filesystem::path& path) { return parse_corpus(read_file(path)); }

TokenSequence tokenize(const Document& doc, const StopwordSet* stopwords) {
    TokenSequence seq;
    seq.doc_id = doc.id;
    const std::string_view text = doc.text;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t start = i;
        while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) continue;
        std::string word = lowercase(text.substr(start, i - start));
        if (code_points(word) < 2) continue;
        if (stopwords != nullptr && stopwords->contains(word)) continue;
        seq.tokens.push_back(Token{std::move(word), seq.tokens.size(), kOutOfVocabulary});
    }
    if (seq.tokens.empty()) throw DataError("document reduces to empty token sequence (id '" + doc.id + "')");
    return seq;
}

WordVectorTable parse_word_vectors(std::string_view content) {
    std::optional<WordVectorTable> table;
    for_each_line(content, [&](std::string_view line, std::size_t line_no) {
        if (is_blank(line)) return;
        const std::string where = " at line " + std::to_string(line_no);
        const auto fields = split_fields(line);
        if (fields.size() < 2) throw DataError("expected a word and at least one value" + where);
        if (!table) table.emplace(fields.size() - 1);
        if (fields.size() - 1 != table->dimension()) {
            throw DataError("inconsistent dimension" + where + ": expected " + std::to_string(table->dimension()) +
                            " values, got " + std::to_string(fields.size() - 1));
        }
        std::vector<double> values(fields.size() - 1);
        for (std::size_t f = 1; f < fields.size(); ++f) {
            const std::string_view field = fields[f];
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (ec != std::errc() || ptr != field.data() + field.size()) {
                throw DataError("non-numeric field '" + std::string(field) + "'" + where);
            }
            if (!std::isfinite(v)) throw DataError("non-finite value" + where);
            values[f - 1] = v;
        }
        const std::string word = lowercase(fields[0]);
        if (table->find(word)) throw DataError("duplicate word at line " + std::to_string(line_no));
        table->add(word, std::move(values));
    });
    if (!table) throw DataError("word vector file is empty");
    return std::move(*table);
}

WordVectorTable load_word_vectors(const std::filesystem::path& path) { return parse_word_vectors(read_file(path)); }

StopwordSet load_stopwords(const std::filesystem::path& path) {
    StopwordSet words;
    for_each_line(read_file(path), [&](std::string_view line, std::size_t) {
        const auto fields = split_fields(line);
        if (!fields.empty()) words.insert(lowercase(fields[0]));
    });
    return words;
}

TokenSequence attach_vocabulary(TokenSequence seq, const WordVectorTable& table) {
    for (Token& t : seq.tokens) t.vector_id = table.find(t.word).value_or(kOutOfVocabulary);
    return seq;
}

ResolvedDocument resolve(const TokenSequence& seq, const WordVectorTable& table, OovPolicy policy, ad::Graph& graph) {
    const std::size_t e = table.dimension();
    ResolvedDocument out;
    out.doc_id = seq.doc_id;
    std::vector<double> rows;
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        const Token& t = seq.tokens[i];
        const std::optional<std::size_t> id = table.find(t.word);
        if (!id && policy == OovPolicy::skip) continue;
        Token kept = t;
        kept.vector_id = id.value_or(kOutOfVocabulary);
        out.tokens.push_back(kept);
        out.alignment.push_back(i);
        if (id) {
            const auto v = table.vector(*id);
            rows.insert(rows.end(), v.begin(), v.end());
        } else {
            rows.insert(rows.end(), e, 0.0);
        }
    }
    if (out.tokens.empty()) throw DataError("document '" + seq.doc_id + "': every token is out of vocabulary");
    out.words = graph.leaf(rows, ad::Shape::matrix(out.tokens.size(), e));
    return out;
}

std::string_view to_string(OovPolicy policy) { return policy == OovPolicy::skip ? "skip" : "zero_vector"; }

OovPolicy parse_oov_policy(std::string_view text) {
    if (text == "skip") return OovPolicy::skip;
    if (text == "zero_vector") return OovPolicy::zero_vector;
    throw ConfigError("unknown oov_policy '" + std::string(text) + "'");
}

}  // namespace gradproj::corpus
