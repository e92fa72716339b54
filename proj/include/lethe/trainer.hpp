#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lethe/corpus.hpp"
#include "lethe/losses.hpp"
#include "lethe/model.hpp"

namespace lethe {

enum class TuneMode { full, low_rank };

// Defaults are calibrated for the bundled toy model: at batch_size >= corpus
// size each epoch is one full-batch step, and 110 steps at alpha 2e-3 stops
// the bundled demo after generations diverge but before the push toward the
// strict per-sample objective starts to erode retained behavior.
struct TrainConfig {
    double alpha{2e-3};
    double w_neg{1.0};
    double w_align{1.0};
    double w_kl{1.0};
    // Weight given to samples that already meet the objective. 1 disables the
    // down-weighting arithmetic; bypass_enabled=false removes it entirely.
    double bypass_weight{0.05};
    bool bypass_enabled{true};
    // Per-token cross-entropy a sample must exceed to count as diverged;
    // defaults to log(vocab size), i.e. worse than uniform guessing.
    std::optional<double> objective_threshold;
    int max_epochs{110};
    int batch_size{32};
    TuneMode mode{TuneMode::full};
    int rank{8};
    std::uint64_t seed{0};
    bool recompute_center{false};
    // Cap on re-encoded generation length for the alignment term.
    int align_max_new{16};

    void validate() const;
    double threshold_for(const ModelHandle& model) const;
};

struct SampleState {
    std::string sample_id;
    bool met_objective{false};
    int bypass_count{0};
    double last_negative_loss{0.0};
};

struct RunState {
    int step{0};
    int epoch{0};
    std::map<std::string, SampleState> states;
    bool stopped_early{false};
    std::vector<LossBreakdown> loss_history;
    // Accounting for the down-weighting: how much weight each kind of sample
    // occurrence contributed to batch losses.
    double applied_weight_sum{0.0};
    long long bypassed_count{0};
    long long full_count{0};
};

// theta <- theta - alpha * g, elementwise. Zero gradient entries and alpha=0
// leave parameters bitwise untouched.
void apply_update(ModelHandle& model, std::span<const double> gradient, double alpha);

// True iff the model's per-token cross-entropy against the sample's stored
// target exceeds the configured threshold (strictly).
bool check_objective(const Sample& sample, const ModelHandle& model, const TrainConfig& config);

// One weighted batch update. Met samples enter with weight bypass_weight,
// unmet with weight 1; the sample part is normalized by the weight sum and the
// retain KL term is added at full weight. States are refreshed afterwards.
LossBreakdown train_step(ModelHandle& model, const ModelHandle& reference,
                         std::span<const Sample> batch, const ClusterCenter& center,
                         std::span<const Sample> retain_batch, const TrainConfig& config,
                         RunState& state);

using StepCallback = std::function<void(int step, const LossBreakdown&)>;

struct RunResult {
    ModelPtr model;
    RunState state;
};

// Full unlearning loop: epochs over unlearn-set batches with cycling retain
// batches, early stop once every sample meets the objective (confirmed by a
// fresh pass at the final parameters).
RunResult run_unlearning(ModelPtr model, const ModelHandle& reference,
                         const CorpusPartition& partition, const TrainConfig& config,
                         const StepCallback& on_step = {});

// full: the model itself; low_rank: the model wrapped with rank-r adapters.
ModelPtr select_mode(ModelPtr model, const TrainConfig& config);

}  // namespace lethe
