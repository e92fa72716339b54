#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lethe {

enum class Category { harmful, knowledge, hallucination, normal, unspecified };

const char* category_name(Category c);
Category category_from_name(const std::string& name);

// One prompt/response pair. `secret` is the substring whose leakage is
// probed in knowledge tasks; `response` may be empty only for
// generation-only probes.
struct Sample {
    std::string id;
    std::string prompt;
    std::string response;
    Category category{Category::unspecified};
    std::optional<std::string> secret;
};

// Ordered sample collection. Iteration order is file order; ids are unique.
struct Corpus {
    std::string name;
    std::vector<Sample> samples;

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }
    const Sample* find(const std::string& id) const;
};

// The discriminated split. unlearn_set must be id-disjoint from both other
// sets; good_set and retain_set may overlap when one file is aliased to
// both roles.
struct CorpusPartition {
    Corpus unlearn_set;
    Corpus good_set;
    Corpus retain_set;
};

// Loads a JSONL corpus (one object per line, fields "id", "prompt",
// "response", optional "category", "secret"; unknown fields ignored).
// Throws with the offending line number on malformed input, and with both
// line numbers on a duplicate id.
Corpus load_corpus(const std::string& path, const std::string& name);

// Writes the corpus back out as JSONL. load_corpus(save_corpus(c)) == c.
void save_corpus(const Corpus& corpus, const std::string& path);

// Concatenates a then b. Throws listing the colliding ids if any overlap.
Corpus merge_disjoint(const Corpus& a, const Corpus& b);

// Validates the partition's disjointness rules (see CorpusPartition).
void validate_partition(const CorpusPartition& partition);

}  // namespace lethe
