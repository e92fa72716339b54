#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lethe/matrix.hpp"

namespace lethe {

// Hyperparameters of the decoder-only character transformer. The bundled
// toy configuration is 2 layers, 2 heads, hidden size 64, context 128.
struct TransformerConfig {
    int n_layers{2};
    int n_heads{2};
    int d_model{64};
    int max_context{128};
    int vocab_size{97};

    int head_dim() const { return d_model / n_heads; }
    int d_ff() const { return 4 * d_model; }
    void validate() const;
};

// Offsets of each weight matrix inside the flat parameter vector.
// All matrices are row-major, out_dim x in_dim.
struct ParamLayout {
    struct Layer {
        std::size_t wq, wk, wv, wo;  // d x d
        std::size_t w1;              // 4d x d
        std::size_t w2;              // d x 4d
    };

    std::size_t wte;      // V x d
    std::size_t wpe;      // ctx x d
    std::size_t lm_head;  // V x d
    std::vector<Layer> layers;
    std::size_t total{0};

    static ParamLayout make(const TransformerConfig& cfg);
};

// Forward-pass activations kept for the backward pass.
struct Activations {
    struct Layer {
        std::vector<double> inv_rms1;  // L
        std::vector<double> ln1;       // L x d
        std::vector<double> q, k, v;   // L x d
        std::vector<double> att;       // H x L x L, row t holds weights for s <= t
        std::vector<double> heads;     // L x d, concatenated head outputs
        std::vector<double> x_mid;     // L x d, after attention residual
        std::vector<double> inv_rms2;  // L
        std::vector<double> ln2;       // L x d
        std::vector<double> ff_pre;    // L x 4d, before relu
        std::vector<double> x_out;     // L x d, after mlp residual
    };

    int len{0};
    std::vector<double> emb;       // L x d, wte + wpe
    std::vector<double> inv_rms0;  // L
    std::vector<double> x0;        // L x d, after the embedding norm
    std::vector<Layer> layers;
    Matrix logits;  // L x V

    // Final-layer hidden states (input to the lm head), L x d.
    const std::vector<double>& hidden(const TransformerConfig& cfg) const {
        return cfg.n_layers == 0 ? x0 : layers.back().x_out;
    }
};

// Runs the model on a token sequence, filling `acts` (including logits).
// Row t of the logits is the next-token distribution after tokens[0..t].
void transformer_forward(const TransformerConfig& cfg, std::span<const double> params,
                         std::span<const int> tokens, Activations& acts);

// Accumulates d(loss)/d(params) into `d_params` given upstream gradients at
// the logits (L x V, may be empty) and/or at the final hidden states
// (L x d, may be empty). Requires the Activations from the matching forward.
void transformer_backward(const TransformerConfig& cfg, std::span<const double> params,
                          std::span<const int> tokens, const Activations& acts,
                          std::span<const double> d_logits, std::span<const double> d_hidden,
                          std::span<double> d_params);

}  // namespace lethe
