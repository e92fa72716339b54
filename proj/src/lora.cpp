#include <cmath>
#include <random>
#include <stdexcept>

#include "lethe/model.hpp"

namespace lethe {

namespace {

// Base model with additive low-rank deltas W + B*A on the attention and MLP
// projections. Only the A/B factors are trainable; the base stays untouched,
// so unwrapping is always possible by dropping the adapters.
class LowRankModel final : public ModelHandle {
public:
    LowRankModel(std::unique_ptr<ToyTransformerModel> base, int rank, std::uint64_t seed)
        : base_(std::move(base)),
          cfg_(base_->config()),
          layout_(ParamLayout::make(cfg_)),
          rank_(rank) {
        const int d = cfg_.d_model;
        const int dff = cfg_.d_ff();
        std::size_t cursor = 0;
        auto add_slot = [&](std::size_t w_off, int out, int in) {
            Slot s;
            s.w_off = w_off;
            s.out = out;
            s.in = in;
            s.a_off = cursor;
            cursor += static_cast<std::size_t>(rank_) * in;
            s.b_off = cursor;
            cursor += static_cast<std::size_t>(out) * rank_;
            slots_.push_back(s);
        };
        for (const ParamLayout::Layer& lay : layout_.layers) {
            add_slot(lay.wq, d, d);
            add_slot(lay.wk, d, d);
            add_slot(lay.wv, d, d);
            add_slot(lay.wo, d, d);
            add_slot(lay.w1, dff, d);
            add_slot(lay.w2, d, dff);
        }
        adapters_.assign(cursor, 0.0);
        std::mt19937_64 rng(seed);
        for (const Slot& s : slots_) {
            // A ~ N(0, 0.25/fan_in): top singular values of A ~ 0.5, so the
            // first effective-weight update runs at a quarter of the plain
            // fine-tuning scale inside the adapter subspace. That headroom
            // keeps the early steps stable at the larger learning rates
            // adapter training needs.
            std::normal_distribution<double> dist(0.0, 0.5 / std::sqrt(static_cast<double>(s.in)));
            for (std::size_t i = 0; i < static_cast<std::size_t>(rank_) * s.in; ++i) {
                adapters_[s.a_off + i] = dist(rng);
            }
            // B stays zero so the wrapped model starts exactly at the base.
        }
    }

    LowRankModel(const LowRankModel& other, bool frozen)
        : base_(std::make_unique<ToyTransformerModel>(
              static_cast<const ToyTransformerModel&>(*other.base_))),
          cfg_(other.cfg_),
          layout_(other.layout_),
          rank_(other.rank_),
          slots_(other.slots_),
          adapters_(other.adapters_),
          frozen_(frozen) {}

    int vocab_size() const override { return cfg_.vocab_size; }
    int max_context() const override { return cfg_.max_context; }
    int hidden_size() const override { return cfg_.d_model; }
    const CharTokenizer& tokenizer() const override { return base_->tokenizer(); }
    bool frozen() const override { return frozen_; }

    std::size_t trainable_count() const override { return adapters_.size(); }
    std::span<const double> trainable_params() const override { return adapters_; }
    std::span<double> mutable_trainable_params() override {
        if (frozen_) throw std::runtime_error("model is frozen; parameters are read-only");
        return adapters_;
    }

    Matrix forward_logits(std::span<const int> tokens) const override {
        materialize();
        transformer_forward(cfg_, eff_, tokens, scratch_);
        return scratch_.logits;
    }

    Matrix forward_hidden(std::span<const int> tokens) const override {
        materialize();
        transformer_forward(cfg_, eff_, tokens, scratch_);
        const std::vector<double>& h = scratch_.hidden(cfg_);
        Matrix out(scratch_.len, cfg_.d_model);
        out.data = h;
        return out;
    }

    std::vector<double> backward(std::span<const int> tokens, std::span<const double> d_logits,
                                 std::span<const double> d_hidden) const override {
        materialize();
        transformer_forward(cfg_, eff_, tokens, scratch_);
        std::vector<double> d_eff(layout_.total, 0.0);
        transformer_backward(cfg_, eff_, tokens, scratch_, d_logits, d_hidden, d_eff);

        // Chain rule through W_eff = W + B*A: dA = B^T dW, dB = dW A^T.
        std::vector<double> grad(adapters_.size(), 0.0);
        for (const Slot& s : slots_) {
            const double* dw = d_eff.data() + s.w_off;
            const double* a = adapters_.data() + s.a_off;
            const double* b = adapters_.data() + s.b_off;
            double* da = grad.data() + s.a_off;
            double* db = grad.data() + s.b_off;
            for (int o = 0; o < s.out; ++o) {
                const double* dw_row = dw + static_cast<std::size_t>(o) * s.in;
                const double* b_row = b + static_cast<std::size_t>(o) * rank_;
                double* db_row = db + static_cast<std::size_t>(o) * rank_;
                for (int r = 0; r < rank_; ++r) {
                    const double* a_row = a + static_cast<std::size_t>(r) * s.in;
                    double* da_row = da + static_cast<std::size_t>(r) * s.in;
                    double acc = 0.0;
                    const double br = b_row[r];
                    for (int i = 0; i < s.in; ++i) {
                        acc += dw_row[i] * a_row[i];
                        da_row[i] += br * dw_row[i];
                    }
                    db_row[r] += acc;
                }
            }
        }
        return grad;
    }

    std::unique_ptr<ModelHandle> clone_frozen() const override {
        return std::unique_ptr<ModelHandle>(new LowRankModel(*this, true));
    }

    std::unique_ptr<ModelHandle> clone_trainable() const override {
        return std::unique_ptr<ModelHandle>(new LowRankModel(*this, false));
    }

    void save_checkpoint(const std::filesystem::path& dir) const override {
        // Checkpoints store the merged effective weights as a plain model, so
        // anything that loads checkpoints needs no adapter support.
        materialize();
        ToyTransformerModel(cfg_, base_->tokenizer(), eff_, false).save_checkpoint(dir);
    }

private:
    struct Slot {
        std::size_t w_off;
        int out;
        int in;
        std::size_t a_off;
        std::size_t b_off;
    };

    void materialize() const {
        eff_.assign(base_->trainable_params().begin(), base_->trainable_params().end());
        for (const Slot& s : slots_) {
            double* w = eff_.data() + s.w_off;
            const double* a = adapters_.data() + s.a_off;
            const double* b = adapters_.data() + s.b_off;
            for (int o = 0; o < s.out; ++o) {
                double* w_row = w + static_cast<std::size_t>(o) * s.in;
                const double* b_row = b + static_cast<std::size_t>(o) * rank_;
                for (int r = 0; r < rank_; ++r) {
                    const double br = b_row[r];
                    if (br == 0.0) continue;
                    const double* a_row = a + static_cast<std::size_t>(r) * s.in;
                    for (int i = 0; i < s.in; ++i) w_row[i] += br * a_row[i];
                }
            }
        }
    }

    std::unique_ptr<ToyTransformerModel> base_;
    TransformerConfig cfg_;
    ParamLayout layout_;
    int rank_;
    std::vector<Slot> slots_;
    std::vector<double> adapters_;
    bool frozen_{false};
    mutable std::vector<double> eff_;
    mutable Activations scratch_;
};

}  // namespace

ModelPtr wrap_low_rank(ModelPtr model, int rank, std::uint64_t seed) {
    if (!model) throw std::invalid_argument("wrap_low_rank: null model");
    if (model->frozen()) throw std::invalid_argument("cannot wrap a frozen model");
    if (rank < 1) throw std::invalid_argument("rank must be >= 1");
    if (rank > model->hidden_size()) {
        throw std::invalid_argument("rank " + std::to_string(rank) + " exceeds hidden size " +
                                    std::to_string(model->hidden_size()));
    }
    auto* toy = dynamic_cast<ToyTransformerModel*>(model.get());
    if (!toy) {
        throw std::invalid_argument("low-rank wrapping supports the bundled transformer only");
    }
    model.release();
    return std::make_unique<LowRankModel>(std::unique_ptr<ToyTransformerModel>(toy), rank, seed);
}

}  // namespace lethe
