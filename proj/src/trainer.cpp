#include "lethe/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lethe {

void TrainConfig::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw std::invalid_argument("alpha must be a positive finite real");
    }
    if (w_neg < 0.0 || w_align < 0.0 || w_kl < 0.0) {
        throw std::invalid_argument("loss weights must be non-negative");
    }
    if (bypass_weight < 0.0 || bypass_weight > 1.0) {
        throw std::invalid_argument("bypass_weight must lie in [0, 1]");
    }
    if (max_epochs < 0) throw std::invalid_argument("max_epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (mode == TuneMode::low_rank && rank < 1) {
        throw std::invalid_argument("low_rank mode needs rank >= 1");
    }
    if (align_max_new < 1) throw std::invalid_argument("align_max_new must be >= 1");
    if (objective_threshold && !std::isfinite(*objective_threshold)) {
        throw std::invalid_argument("objective_threshold must be finite");
    }
}

double TrainConfig::threshold_for(const ModelHandle& model) const {
    return objective_threshold.value_or(std::log(static_cast<double>(model.vocab_size())));
}

void apply_update(ModelHandle& model, std::span<const double> gradient, double alpha) {
    if (model.frozen()) throw std::runtime_error("cannot update a frozen model");
    if (gradient.size() != model.trainable_count()) {
        throw std::invalid_argument("gradient length " + std::to_string(gradient.size()) +
                                    " does not match trainable parameter count " +
                                    std::to_string(model.trainable_count()));
    }
    if (alpha == 0.0) return;
    std::span<double> params = model.mutable_trainable_params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        // Skipping exact zeros keeps untouched parameters bitwise identical.
        if (gradient[i] != 0.0) params[i] -= alpha * gradient[i];
    }
}

bool check_objective(const Sample& sample, const ModelHandle& model, const TrainConfig& config) {
    const double ce = -negative_loss(model, sample.prompt, sample.response);
    return ce > config.threshold_for(model);
}

namespace {

// Refresh one sample's state from the current parameters.
void refresh_state(const Sample& sample, const ModelHandle& model, const TrainConfig& config,
                   RunState& state) {
    SampleState& st = state.states[sample.id];
    st.sample_id = sample.id;
    const double neg = negative_loss(model, sample.prompt, sample.response);
    st.last_negative_loss = neg;
    st.met_objective = -neg > config.threshold_for(model);
}

bool all_met(const RunState& state) {
    for (const auto& [id, st] : state.states) {
        if (!st.met_objective) return false;
    }
    return true;
}

}  // namespace

LossBreakdown train_step(ModelHandle& model, const ModelHandle& reference,
                         std::span<const Sample> batch, const ClusterCenter& center,
                         std::span<const Sample> retain_batch, const TrainConfig& config,
                         RunState& state) {
    if (batch.empty()) throw std::invalid_argument("train_step needs a non-empty batch");
    if (!reference.frozen()) throw std::invalid_argument("reference model must be frozen");

    const std::size_t n_params = model.trainable_count();
    std::vector<double> grad(n_params, 0.0);
    double weight_sum = 0.0;
    double neg_sum = 0.0;
    double align_sum = 0.0;

    for (const Sample& s : batch) {
        SampleState& st = state.states[s.id];
        if (st.sample_id.empty()) st.sample_id = s.id;
        const bool bypassed = st.met_objective && config.bypass_enabled;
        const double w = bypassed ? config.bypass_weight : 1.0;
        if (bypassed) {
            ++st.bypass_count;
            ++state.bypassed_count;
        } else {
            ++state.full_count;
        }
        state.applied_weight_sum += w;
        weight_sum += w;
        if (w == 0.0) continue;

        if (config.w_neg > 0.0) {
            TermGrad t = negative_loss_grad(model, s.prompt, s.response);
            neg_sum += w * t.value;
            const double scale = w * config.w_neg;
            for (std::size_t i = 0; i < n_params; ++i) grad[i] += scale * t.grad[i];
        }
        if (config.w_align > 0.0) {
            const std::string gen = generate(model, s.prompt, config.align_max_new);
            if (!gen.empty()) {
                TermGrad t = align_loss_fixed_grad(model, gen, center);
                align_sum += w * t.value;
                const double scale = w * config.w_align;
                for (std::size_t i = 0; i < n_params; ++i) grad[i] += scale * t.grad[i];
            }
        }
    }

    LossBreakdown breakdown;
    breakdown.w_neg = config.w_neg;
    breakdown.w_align = config.w_align;
    breakdown.w_kl = config.w_kl;
    if (weight_sum > 0.0) {
        breakdown.negative = neg_sum / weight_sum;
        breakdown.align = align_sum / weight_sum;
        const double inv = 1.0 / weight_sum;
        for (double& g : grad) g *= inv;
    } else {
        std::fill(grad.begin(), grad.end(), 0.0);
    }

    if (config.w_kl > 0.0 && !retain_batch.empty()) {
        double kl_sum = 0.0;
        std::vector<double> kl_grad(n_params, 0.0);
        for (const Sample& r : retain_batch) {
            TermGrad t = kl_retention_grad(reference, model, r.prompt, r.response);
            kl_sum += t.value;
            for (std::size_t i = 0; i < n_params; ++i) kl_grad[i] += t.grad[i];
        }
        const double inv = 1.0 / static_cast<double>(retain_batch.size());
        breakdown.kl = kl_sum * inv;
        const double scale = config.w_kl * inv;
        for (std::size_t i = 0; i < n_params; ++i) grad[i] += scale * kl_grad[i];
    }

    breakdown.total = config.w_neg * breakdown.negative + config.w_align * breakdown.align +
                      config.w_kl * breakdown.kl;

    apply_update(model, grad, config.alpha);
    state.step += 1;
    for (const Sample& s : batch) refresh_state(s, model, config, state);
    state.loss_history.push_back(breakdown);
    return breakdown;
}

RunResult run_unlearning(ModelPtr model, const ModelHandle& reference,
                         const CorpusPartition& partition, const TrainConfig& config,
                         const StepCallback& on_step) {
    if (!model) throw std::invalid_argument("run_unlearning: null model");
    config.validate();
    validate_partition(partition);
    if (!reference.frozen()) throw std::invalid_argument("reference model must be frozen");

    model = select_mode(std::move(model), config);
    RunState state;

    const Corpus& unlearn = partition.unlearn_set;
    for (const Sample& s : unlearn.samples) refresh_state(s, *model, config, state);
    if (all_met(state)) {
        state.stopped_early = true;
        return {std::move(model), std::move(state)};
    }

    ClusterCenter center;
    center.center.assign(model->hidden_size(), 0.0);
    if (config.w_align > 0.0) center = cluster_center(*model, partition.good_set);

    const std::vector<Sample>& retain = partition.retain_set.samples;
    std::size_t retain_pos = 0;
    auto next_retain_batch = [&]() {
        std::vector<Sample> rb;
        if (retain.empty()) return rb;
        for (int i = 0; i < config.batch_size; ++i) {
            rb.push_back(retain[retain_pos]);
            retain_pos = (retain_pos + 1) % retain.size();
        }
        return rb;
    };

    bool done = false;
    for (int epoch = 0; epoch < config.max_epochs && !done; ++epoch) {
        state.epoch = epoch + 1;
        if (config.recompute_center && config.w_align > 0.0 && epoch > 0) {
            center = cluster_center(*model, partition.good_set);
        }
        for (std::size_t begin = 0; begin < unlearn.samples.size() && !done;
             begin += config.batch_size) {
            const std::size_t end =
                std::min(begin + static_cast<std::size_t>(config.batch_size),
                         unlearn.samples.size());
            const std::span<const Sample> batch(unlearn.samples.data() + begin, end - begin);
            const std::vector<Sample> retain_batch = next_retain_batch();
            const LossBreakdown b =
                train_step(*model, reference, batch, center, retain_batch, config, state);
            if (!std::isfinite(b.total)) {
                throw std::runtime_error("non-finite loss at step " + std::to_string(state.step));
            }
            if (on_step) on_step(state.step, b);

            if (all_met(state)) {
                // Some states may be stale; confirm at the current parameters
                // before declaring convergence.
                for (const Sample& s : unlearn.samples) refresh_state(s, *model, config, state);
                if (all_met(state)) {
                    state.stopped_early = true;
                    done = true;
                }
            }
        }
    }
    return {std::move(model), std::move(state)};
}

ModelPtr select_mode(ModelPtr model, const TrainConfig& config) {
    if (config.mode == TuneMode::full) return model;
    return wrap_low_rank(std::move(model), config.rank, config.seed);
}

}  // namespace lethe
