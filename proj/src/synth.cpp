#include "gradproj/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "gradproj/errors.hpp"
#include "gradproj/rng.hpp"

namespace gradproj::synth {
namespace {

const std::vector<std::string> kSport = {"tennis", "football", "match", "goal", "team", "league", "player", "coach"};
const std::vector<std::string> kTech = {"software", "chip", "computer", "network", "robot", "code", "server", "cloud"};
const std::vector<std::string> kFiller = {"today", "people", "said", "year", "time", "report",
                                          "week", "news", "many", "new", "first", "last"};

std::vector<double> noisy(Rng& rng, std::size_t e, double noise, std::size_t axis, double weight) {
    std::vector<double> v(e);
    for (double& x : v) x = noise * rng.normal();
    if (weight != 0.0) v[axis] += weight;
    return v;
}

}  // namespace

bool SyntheticCorpus::is_topic_word(const std::string& w) const {
    return std::find(sport_words.begin(), sport_words.end(), w) != sport_words.end() ||
           std::find(tech_words.begin(), tech_words.end(), w) != tech_words.end();
}

SyntheticCorpus two_topic_corpus(const SynthOptions& opts) {
    if (opts.dimension < 2) throw ConfigError("synthetic corpus needs dimension >= 2");
    if (opts.topic_words_per_doc == 0) throw ConfigError("synthetic corpus needs at least one topic word per document");
    Rng rng(opts.seed);
    SyntheticCorpus c{{}, corpus::WordVectorTable(opts.dimension), kSport, kTech, kFiller};
    for (const auto& w : kSport) c.vectors.add(w, noisy(rng, opts.dimension, 0.1, 0, 1.0));
    for (const auto& w : kTech) c.vectors.add(w, noisy(rng, opts.dimension, 0.1, 1, 1.0));
    for (const auto& w : kFiller) c.vectors.add(w, noisy(rng, opts.dimension, 0.2, 0, 0.0));

    for (std::size_t i = 0; i < opts.documents; ++i) {
        const bool sport = i % 2 == 0;
        const auto& topic = sport ? kSport : kTech;
        std::vector<std::string> words;
        for (std::size_t t = 0; t < opts.topic_words_per_doc; ++t) words.push_back(topic[rng.below(topic.size())]);
        for (std::size_t t = 0; t < opts.filler_words_per_doc; ++t) words.push_back(kFiller[rng.below(kFiller.size())]);
        std::shuffle(words.begin(), words.end(), rng.engine());
        std::string text;
        for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
        char id[16];
        std::snprintf(id, sizeof id, "doc%02zu", i);
        c.documents.push_back({id, text, sport ? "sport" : "tech"});
    }
    return c;
}

void write_files(const SyntheticCorpus& c, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream docs(dir / "corpus.jsonl");
    for (const auto& d : c.documents) {
        nlohmann::ordered_json j{{"id", d.id}, {"text", d.text}};
        if (d.label) j["label"] = *d.label;
        docs << j.dump() << '\n';
    }
    std::ofstream vec(dir / "vectors.txt");
    vec.precision(17);
    for (std::size_t i = 0; i < c.vectors.size(); ++i) {
        vec << c.vectors.word(i);
        for (double v : c.vectors.vector(i)) vec << ' ' << v;
        vec << '\n';
    }
    std::ofstream(dir / "palette.json") << R"({"sport": "#1f77b4", "tech": "#ff7f0e", "mixed": "#800080"})" << '\n';
    if (!docs || !vec) throw DataError("cannot write synthetic corpus to " + dir.string());
}

}  // namespace gradproj::synth
