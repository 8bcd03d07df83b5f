#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selfdetect/text_stats.hpp"

namespace selfdetect {

enum class Source { Human, Ai };

std::string to_string(Source source);
Source source_from_string(const std::string& s);

struct EssayRecord {
    std::string id;
    std::string topic;
    Source source = Source::Human;
    std::optional<std::string> generator;  // present iff source == Ai
    bool paraphrased = false;              // always false for Human
    std::string text;
    TextStats stats;
    std::string created_at;  // ISO-8601 UTC
    std::map<std::string, std::string> provenance;

    bool operator==(const EssayRecord&) const = default;
};

struct Corpus {
    static constexpr int kSchemaVersion = 1;
    int schema_version = kSchemaVersion;
    std::vector<EssayRecord> records;
};

struct GroupFilter {
    std::optional<Source> source;
    std::optional<std::string> generator;
    std::optional<bool> paraphrased;

    bool matches(const EssayRecord& rec) const;
};

struct GroupStats {
    std::size_t n = 0;
    double word_count = 0.0;
    double sentence_count = 0.0;
    double words_per_sentence = 0.0;  // mean of per-record ratios
    double newline_count = 0.0;
};

// Arithmetic means over the records selected by `filter`.
// Throws EmptyGroup when nothing matches.
GroupStats group_stats(const Corpus& corpus, const GroupFilter& filter);

// Exactly n_per_class AI records matching (generator, paraphrased) followed
// by n_per_class Human records, each block sorted by id. Throws
// InsufficientRecords naming the deficient class.
std::vector<EssayRecord> select_balanced(const Corpus& corpus, const std::string& generator,
                                         bool paraphrased, std::size_t n_per_class);

// Per-record invariants plus corpus-wide id uniqueness; stored stats must
// equal recomputation from the text. Throws SchemaViolation naming the
// record and field.
void validate_record(const EssayRecord& rec);
void validate_corpus(const Corpus& corpus);

// JSONL on disk: a {"schema_version": ...} header line, then one record
// object per line. save followed by load is the identity on records.
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Merges several corpus files; duplicate ids across files are a
// SchemaViolation.
Corpus load_corpora(const std::vector<std::filesystem::path>& paths);

// Streaming writer used by commands that persist partial progress.
class CorpusWriter {
   public:
    // Creates the file with a header line, or appends when `append` is true
    // and the file already exists.
    CorpusWriter(const std::filesystem::path& path, bool append = false);
    void add(const EssayRecord& rec);

   private:
    std::ofstream out_;
    std::filesystem::path path_;
};

}  // namespace selfdetect
