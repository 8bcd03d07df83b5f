#include "selfdetect/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "selfdetect/errors.hpp"
#include "selfdetect/util.hpp"

namespace selfdetect {

using nlohmann::json;

std::string to_string(Source source) { return source == Source::Ai ? "AI" : "Human"; }

Source source_from_string(const std::string& s) {
    if (s == "AI") return Source::Ai;
    if (s == "Human") return Source::Human;
    throw SchemaViolation("unknown source value: " + s);
}

bool GroupFilter::matches(const EssayRecord& rec) const {
    if (source && rec.source != *source) return false;
    if (generator && (!rec.generator || *rec.generator != *generator)) return false;
    if (paraphrased && rec.paraphrased != *paraphrased) return false;
    return true;
}

GroupStats group_stats(const Corpus& corpus, const GroupFilter& filter) {
    GroupStats g;
    for (const auto& rec : corpus.records) {
        if (!filter.matches(rec)) continue;
        ++g.n;
        g.word_count += static_cast<double>(rec.stats.word_count);
        g.sentence_count += static_cast<double>(rec.stats.sentence_count);
        g.words_per_sentence += rec.stats.words_per_sentence;
        g.newline_count += static_cast<double>(rec.stats.newline_count);
    }
    if (g.n == 0) throw EmptyGroup("group filter matches no records");
    const double n = static_cast<double>(g.n);
    g.word_count /= n;
    g.sentence_count /= n;
    g.words_per_sentence /= n;
    g.newline_count /= n;
    return g;
}

std::vector<EssayRecord> select_balanced(const Corpus& corpus, const std::string& generator,
                                         bool paraphrased, std::size_t n_per_class) {
    std::vector<EssayRecord> ai;
    std::vector<EssayRecord> human;
    for (const auto& rec : corpus.records) {
        if (rec.source == Source::Ai) {
            if (rec.generator && *rec.generator == generator && rec.paraphrased == paraphrased)
                ai.push_back(rec);
        } else {
            human.push_back(rec);
        }
    }
    if (ai.size() < n_per_class) throw InsufficientRecords("AI", ai.size(), n_per_class);
    if (human.size() < n_per_class) throw InsufficientRecords("Human", human.size(), n_per_class);

    auto by_id = [](const EssayRecord& a, const EssayRecord& b) { return a.id < b.id; };
    std::sort(ai.begin(), ai.end(), by_id);
    std::sort(human.begin(), human.end(), by_id);
    ai.resize(n_per_class);
    human.resize(n_per_class);

    std::vector<EssayRecord> out;
    out.reserve(2 * n_per_class);
    out.insert(out.end(), ai.begin(), ai.end());
    out.insert(out.end(), human.begin(), human.end());
    return out;
}

void validate_record(const EssayRecord& rec) {
    auto fail = [&](const std::string& what) {
        throw SchemaViolation("record '" + rec.id + "': " + what);
    };
    if (rec.id.empty()) throw SchemaViolation("record with empty id");
    if (rec.text.empty()) fail("text is empty");
    if (rec.source == Source::Human) {
        if (rec.generator) fail("Human record carries a generator");
        if (rec.paraphrased) fail("Human record marked paraphrased");
    } else {
        if (!rec.generator || rec.generator->empty()) fail("AI record lacks a generator");
    }
    TextStats recomputed = compute_text_stats(rec.text);
    if (recomputed.word_count != rec.stats.word_count) fail("stats field word_count disagrees with text");
    if (recomputed.sentence_count != rec.stats.sentence_count)
        fail("stats field sentence_count disagrees with text");
    if (recomputed.newline_count != rec.stats.newline_count)
        fail("stats field newline_count disagrees with text");
    if (recomputed.words_per_sentence != rec.stats.words_per_sentence)
        fail("stats field words_per_sentence disagrees with text");
}

void validate_corpus(const Corpus& corpus) {
    std::set<std::string> ids;
    for (const auto& rec : corpus.records) {
        validate_record(rec);
        if (!ids.insert(rec.id).second) throw SchemaViolation("duplicate record id '" + rec.id + "'");
    }
}

namespace {

json record_to_json(const EssayRecord& rec) {
    json j{{"id", rec.id},
           {"topic", rec.topic},
           {"source", to_string(rec.source)},
           {"paraphrased", rec.paraphrased},
           {"text", rec.text},
           {"stats",
            {{"word_count", rec.stats.word_count},
             {"sentence_count", rec.stats.sentence_count},
             {"words_per_sentence", rec.stats.words_per_sentence},
             {"newline_count", rec.stats.newline_count}}},
           {"created_at", rec.created_at},
           {"provenance", rec.provenance}};
    if (rec.generator) j["generator"] = *rec.generator;
    return j;
}

EssayRecord record_from_json(const json& j) {
    EssayRecord rec;
    try {
        rec.id = j.at("id").get<std::string>();
        rec.topic = j.at("topic").get<std::string>();
        rec.source = source_from_string(j.at("source").get<std::string>());
        if (j.contains("generator")) rec.generator = j.at("generator").get<std::string>();
        rec.paraphrased = j.at("paraphrased").get<bool>();
        rec.text = j.at("text").get<std::string>();
        const json& s = j.at("stats");
        rec.stats.word_count = s.at("word_count").get<std::int64_t>();
        rec.stats.sentence_count = s.at("sentence_count").get<std::int64_t>();
        rec.stats.words_per_sentence = s.at("words_per_sentence").get<double>();
        rec.stats.newline_count = s.at("newline_count").get<std::int64_t>();
        rec.created_at = j.value("created_at", std::string{});
        if (j.contains("provenance"))
            rec.provenance = j.at("provenance").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        throw SchemaViolation(std::string("malformed corpus record: ") + e.what());
    }
    return rec;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open corpus file: " + path.string());

    Corpus corpus;
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw SchemaViolation(path.string() + ":" + std::to_string(line_no) +
                                  ": invalid JSON: " + e.what());
        }
        if (!have_header) {
            if (!j.contains("schema_version"))
                throw SchemaViolation(path.string() + ": missing schema_version header line");
            corpus.schema_version = j.at("schema_version").get<int>();
            if (corpus.schema_version != Corpus::kSchemaVersion)
                throw SchemaViolation(path.string() + ": unsupported schema_version " +
                                      std::to_string(corpus.schema_version));
            have_header = true;
            continue;
        }
        corpus.records.push_back(record_from_json(j));
    }
    if (!have_header) throw SchemaViolation(path.string() + ": empty corpus file");
    validate_corpus(corpus);
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    validate_corpus(corpus);
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot write corpus file: " + path.string());
    out << json{{"schema_version", corpus.schema_version}}.dump() << '\n';
    for (const auto& rec : corpus.records) out << record_to_json(rec).dump() << '\n';
    if (!out) throw IoFailure("write failed: " + path.string());
}

Corpus load_corpora(const std::vector<std::filesystem::path>& paths) {
    Corpus merged;
    for (const auto& p : paths) {
        Corpus one = load_corpus(p);
        merged.records.insert(merged.records.end(), one.records.begin(), one.records.end());
    }
    validate_corpus(merged);
    return merged;
}

CorpusWriter::CorpusWriter(const std::filesystem::path& path, bool append) : path_(path) {
    ensure_parent_dir(path);
    bool exists = std::filesystem::exists(path);
    out_.open(path, append ? std::ios::app : std::ios::trunc);
    if (!out_) throw IoFailure("cannot open corpus file for writing: " + path.string());
    if (!append || !exists) out_ << json{{"schema_version", Corpus::kSchemaVersion}}.dump() << '\n';
}

void CorpusWriter::add(const EssayRecord& rec) {
    validate_record(rec);
    out_ << record_to_json(rec).dump() << '\n';
    out_.flush();
    if (!out_) throw IoFailure("write failed: " + path_.string());
}

}  // namespace selfdetect
