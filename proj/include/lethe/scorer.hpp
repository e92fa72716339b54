#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "lethe/corpus.hpp"
#include "lethe/model.hpp"

namespace lethe {

struct ScoreVerdict {
    std::string sample_id;
    double score{0.0};
    bool flagged{false};
};

// Output-quality judge. Higher scores mean more benign; strictly below the
// discrimination threshold means the sample needs unlearning.
class ScorerPlugin {
public:
    virtual ~ScorerPlugin() = default;
    virtual const std::string& name() const = 0;
    virtual double score(const std::string& prompt, const std::string& response) const = 0;
};

using ScorerPtr = std::unique_ptr<ScorerPlugin>;

// -1.0 when any blocklist phrase occurs in the response (case-insensitive),
// else +1.0.
ScorerPtr keyword_scorer(std::vector<std::string> blocklist);

// -1.0 when the pattern matches anywhere in the response (case-insensitive),
// else +1.0.
ScorerPtr regex_scorer(const std::string& pattern);

struct DiscriminationResult {
    CorpusPartition partition;
    std::vector<ScoreVerdict> verdicts;
};

// Generates the model's greedy response for every prompt, scores it, and
// splits: flagged samples go to the unlearn set with the generation stored as
// the response to diverge from; the rest keep their original record in the
// good set. retain passes through untouched.
DiscriminationResult discriminate(const Corpus& corpus, const ModelHandle& model,
                                  const ScorerPlugin& scorer, double threshold, Corpus retain,
                                  int max_new = 64);

void save_verdicts(const std::filesystem::path& path, const std::vector<ScoreVerdict>& verdicts);

}  // namespace lethe
