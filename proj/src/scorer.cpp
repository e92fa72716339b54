#include "lethe/scorer.hpp"

#include <fstream>
#include <regex>
#include <stdexcept>

#include "json.hpp"
#include "lethe/text.hpp"

namespace lethe {

namespace {

class KeywordScorer final : public ScorerPlugin {
public:
    explicit KeywordScorer(std::vector<std::string> blocklist) : name_("keyword") {
        if (blocklist.empty()) throw std::invalid_argument("blocklist must be non-empty");
        for (const std::string& phrase : blocklist) {
            if (phrase.empty()) {
                throw std::invalid_argument("blocklist phrases must be non-empty");
            }
            lowered_.push_back(ascii_lower(phrase));
        }
    }

    const std::string& name() const override { return name_; }

    double score(const std::string& /*prompt*/, const std::string& response) const override {
        const std::string hay = ascii_lower(response);
        for (const std::string& phrase : lowered_) {
            if (hay.find(phrase) != std::string::npos) return -1.0;
        }
        return 1.0;
    }

private:
    std::string name_;
    std::vector<std::string> lowered_;
};

class RegexScorer final : public ScorerPlugin {
public:
    explicit RegexScorer(const std::string& pattern) : name_("regex") {
        try {
            re_ = std::regex(pattern, std::regex::ECMAScript | std::regex::icase);
        } catch (const std::regex_error& e) {
            throw std::invalid_argument("invalid scorer pattern '" + pattern + "': " + e.what());
        }
    }

    const std::string& name() const override { return name_; }

    double score(const std::string& /*prompt*/, const std::string& response) const override {
        return std::regex_search(response, re_) ? -1.0 : 1.0;
    }

private:
    std::string name_;
    std::regex re_;
};

}  // namespace

ScorerPtr keyword_scorer(std::vector<std::string> blocklist) {
    return std::make_unique<KeywordScorer>(std::move(blocklist));
}

ScorerPtr regex_scorer(const std::string& pattern) {
    return std::make_unique<RegexScorer>(pattern);
}

DiscriminationResult discriminate(const Corpus& corpus, const ModelHandle& model,
                                  const ScorerPlugin& scorer, double threshold, Corpus retain,
                                  int max_new) {
    if (corpus.empty()) throw std::invalid_argument("cannot discriminate an empty corpus");

    DiscriminationResult result;
    result.partition.unlearn_set.name = corpus.name + ".unlearn";
    result.partition.good_set.name = corpus.name + ".good";
    result.partition.retain_set = std::move(retain);

    for (const Sample& s : corpus.samples) {
        std::string generation;
        double score = 0.0;
        try {
            generation = generate(model, s.prompt, max_new);
            score = scorer.score(s.prompt, generation);
        } catch (const std::exception& e) {
            throw std::runtime_error("scoring failed on sample '" + s.id + "': " + e.what());
        }
        ScoreVerdict v;
        v.sample_id = s.id;
        v.score = score;
        v.flagged = score < threshold;
        result.verdicts.push_back(v);
        if (v.flagged) {
            Sample flagged = s;
            flagged.response = generation;
            result.partition.unlearn_set.samples.push_back(std::move(flagged));
        } else {
            result.partition.good_set.samples.push_back(s);
        }
    }
    return result;
}

void save_verdicts(const std::filesystem::path& path, const std::vector<ScoreVerdict>& verdicts) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const ScoreVerdict& v : verdicts) {
        nlohmann::ordered_json j;
        j["sample_id"] = v.sample_id;
        j["score"] = v.score;
        j["flagged"] = v.flagged;
        out << j.dump() << "\n";
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace lethe
