#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lethe/matrix.hpp"
#include "lethe/tokenizer.hpp"
#include "lethe/transformer.hpp"

namespace lethe {

// Handle to a causal LM. Frozen handles reject parameter mutation; everything
// else (forward, generation, feature extraction) works on both.
class ModelHandle {
public:
    virtual ~ModelHandle() = default;

    virtual int vocab_size() const = 0;
    virtual int max_context() const = 0;
    virtual int hidden_size() const = 0;
    virtual const CharTokenizer& tokenizer() const = 0;
    virtual bool frozen() const = 0;

    // Trainable parameter view. For the plain model this is every weight; a
    // low-rank wrapper exposes only the adapter factors.
    virtual std::size_t trainable_count() const = 0;
    virtual std::span<const double> trainable_params() const = 0;
    virtual std::span<double> mutable_trainable_params() = 0;

    // Row t of the result is the next-token logit distribution after
    // tokens[0..t].
    virtual Matrix forward_logits(std::span<const int> tokens) const = 0;
    // Final-layer hidden states, one row per position.
    virtual Matrix forward_hidden(std::span<const int> tokens) const = 0;

    // Gradient of sum(d_logits . logits) + sum(d_hidden . hidden) with respect
    // to the trainable parameters. Either seed may be empty (treated as zero);
    // when present, d_logits is L x V and d_hidden is L x d, row-major.
    virtual std::vector<double> backward(std::span<const int> tokens,
                                         std::span<const double> d_logits,
                                         std::span<const double> d_hidden) const = 0;

    virtual std::unique_ptr<ModelHandle> clone_frozen() const = 0;
    virtual std::unique_ptr<ModelHandle> clone_trainable() const = 0;

    // Writes a manifest plus raw weights; load_checkpoint round-trips bitwise.
    virtual void save_checkpoint(const std::filesystem::path& dir) const = 0;
};

using ModelPtr = std::unique_ptr<ModelHandle>;

// The bundled deterministic character-level transformer.
class ToyTransformerModel final : public ModelHandle {
public:
    ToyTransformerModel(TransformerConfig cfg, CharTokenizer tok, std::uint64_t seed,
                        double init_std);
    ToyTransformerModel(TransformerConfig cfg, CharTokenizer tok, std::vector<double> params,
                        bool frozen);

    int vocab_size() const override { return cfg_.vocab_size; }
    int max_context() const override { return cfg_.max_context; }
    int hidden_size() const override { return cfg_.d_model; }
    const CharTokenizer& tokenizer() const override { return tok_; }
    bool frozen() const override { return frozen_; }

    std::size_t trainable_count() const override { return params_.size(); }
    std::span<const double> trainable_params() const override { return params_; }
    std::span<double> mutable_trainable_params() override;

    Matrix forward_logits(std::span<const int> tokens) const override;
    Matrix forward_hidden(std::span<const int> tokens) const override;
    std::vector<double> backward(std::span<const int> tokens, std::span<const double> d_logits,
                                 std::span<const double> d_hidden) const override;

    std::unique_ptr<ModelHandle> clone_frozen() const override;
    std::unique_ptr<ModelHandle> clone_trainable() const override;

    void save_checkpoint(const std::filesystem::path& dir) const override;
    static std::unique_ptr<ToyTransformerModel> load(const std::filesystem::path& dir);

    const TransformerConfig& config() const { return cfg_; }

private:
    TransformerConfig cfg_;
    CharTokenizer tok_;
    std::vector<double> params_;
    bool frozen_{false};
    mutable Activations scratch_;
};

// Mean of the final-layer hidden states over all positions of text.
std::vector<double> phi(const ModelHandle& model, const std::string& text);

// Continuation text for prompt: greedy decoding (ties toward the smaller
// token id), or seeded categorical sampling when seed is present. Stops at the
// end-of-sequence token, after max_new tokens, or at the context limit.
std::string generate(const ModelHandle& model, const std::string& prompt, int max_new,
                     std::optional<std::uint64_t> seed = std::nullopt);

ModelPtr load_checkpoint(const std::filesystem::path& dir);

// Adds trainable low-rank factors B*A to every attention and MLP projection
// matrix; base weights (and the embedding/unembedding tables) stay frozen.
ModelPtr wrap_low_rank(ModelPtr model, int rank, std::uint64_t seed);

}  // namespace lethe
