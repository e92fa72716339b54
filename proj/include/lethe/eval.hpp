#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lethe/corpus.hpp"
#include "lethe/model.hpp"
#include "lethe/scorer.hpp"

namespace lethe {

enum class MetricKind { similarity, fluency, diversity, harmful_score, leak_rate };
enum class Direction { higher_better, lower_better };

const char* metric_name(MetricKind kind);
const char* direction_name(Direction dir);

struct MetricRecord {
    MetricKind metric{MetricKind::similarity};
    double value{0.0};
    Direction direction{Direction::higher_better};
    int n{0};
};

struct EvalRow {
    std::string role;
    std::string variant;
    std::vector<MetricRecord> records;
};

struct EvalReport {
    std::string run_id;
    std::uint64_t seed{0};
    std::vector<EvalRow> rows;
};

// Text-to-text similarity backend; the bundled default is token-level F1.
class SimilarityPlugin {
public:
    virtual ~SimilarityPlugin() = default;
    virtual const std::string& name() const = 0;
    virtual double score(const std::string& a, const std::string& b) const = 0;
};

using SimilarityPtr = std::unique_ptr<SimilarityPlugin>;

SimilarityPtr token_f1_similarity();

// Harmonic mean of token precision/recall over whitespace tokens, casefolded,
// with multiset counting.
double token_f1(const std::string& a, const std::string& b);

double similarity(const std::string& a, const std::string& b, const SimilarityPlugin& plugin);

// Conditional perplexity: exp of the mean per-token negative log-likelihood of
// the answer given the question.
double fluency(const ModelHandle& reference_lm, const std::string& question,
               const std::string& answer);

// Distinct tokens / total tokens over all texts, whitespace tokenization,
// casefolded.
double diversity(std::span<const std::string> texts);

// Fraction of probes whose greedy generation (max_new = 64) contains the
// probe's secret as a casefolded substring.
double leak_rate(const ModelHandle& model, const Corpus& probes);

// Mean scorer score over (prompt, generation) pairs; higher is safer.
double harmful_score(const ScorerPlugin& scorer,
                     std::span<const std::pair<std::string, std::string>> generations);

struct VariantEntry {
    std::string name;
    const ModelHandle* model{nullptr};
};

// Draws sample_count samples per role (seeded, same draw for every variant),
// generates with each variant, and aggregates the role-appropriate metrics:
// knowledge probes get similarity/leak_rate/fluency, hallucination sets get
// diversity/harmful_score/fluency, other unlearn sets get
// similarity/harmful_score/fluency, and the retain role gets
// similarity-to-gold/fluency.
EvalReport evaluate_variants(std::span<const VariantEntry> models,
                             const CorpusPartition& partition, const ScorerPlugin& scorer,
                             const SimilarityPlugin& sim, const ModelHandle& reference_lm,
                             int sample_count, std::uint64_t seed);

// One row per variant, metric columns grouped by role.
std::string render_report_table(const EvalReport& report);

std::string report_to_json(const EvalReport& report);

}  // namespace lethe
