#include "lethe/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lethe {

namespace {

constexpr double kRmsEps = 1e-5;

// y = W x for one position; W is out_dim x in_dim, row-major.
void matvec(const double* w, const double* x, double* y, int out_dim, int in_dim) {
    for (int o = 0; o < out_dim; ++o) {
        const double* row = w + static_cast<std::size_t>(o) * in_dim;
        double acc = 0.0;
        for (int i = 0; i < in_dim; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

// Backward of y = W x: accumulates dW += dy x^T and dx += W^T dy.
void matvec_backward(const double* w, const double* x, const double* dy, double* dw, double* dx,
                     int out_dim, int in_dim) {
    for (int o = 0; o < out_dim; ++o) {
        const double g = dy[o];
        if (g == 0.0) continue;
        const double* row = w + static_cast<std::size_t>(o) * in_dim;
        double* drow = dw + static_cast<std::size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) {
            drow[i] += g * x[i];
            dx[i] += row[i] * g;
        }
    }
}

double rmsnorm_forward(const double* x, double* y, int n) {
    double ms = 0.0;
    for (int i = 0; i < n; ++i) ms += x[i] * x[i];
    ms /= n;
    const double s = 1.0 / std::sqrt(ms + kRmsEps);
    for (int i = 0; i < n; ++i) y[i] = x[i] * s;
    return s;
}

// d_x += backward of y = x * s(x), with s = 1/sqrt(mean(x^2)+eps).
void rmsnorm_backward(const double* x, double inv_rms, const double* dy, double* dx, int n) {
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += dy[i] * x[i];
    const double coeff = inv_rms * inv_rms * inv_rms * dot / n;
    for (int i = 0; i < n; ++i) dx[i] += inv_rms * dy[i] - coeff * x[i];
}

}  // namespace

void TransformerConfig::validate() const {
    if (n_layers < 0) throw std::invalid_argument("n_layers must be >= 0");
    if (n_heads < 1) throw std::invalid_argument("n_heads must be >= 1");
    if (d_model < 1 || d_model % n_heads != 0) {
        throw std::invalid_argument("d_model must be a positive multiple of n_heads");
    }
    if (max_context < 1) throw std::invalid_argument("max_context must be >= 1");
    if (vocab_size < 2) throw std::invalid_argument("vocab_size must be >= 2");
}

ParamLayout ParamLayout::make(const TransformerConfig& cfg) {
    cfg.validate();
    ParamLayout layout;
    std::size_t cursor = 0;
    auto mat = [&cursor](int out_dim, int in_dim) {
        std::size_t off = cursor;
        cursor += static_cast<std::size_t>(out_dim) * in_dim;
        return off;
    };

    layout.wte = mat(cfg.vocab_size, cfg.d_model);
    layout.wpe = mat(cfg.max_context, cfg.d_model);
    layout.lm_head = mat(cfg.vocab_size, cfg.d_model);
    layout.layers.resize(cfg.n_layers);
    for (int l = 0; l < cfg.n_layers; ++l) {
        ParamLayout::Layer& lay = layout.layers[l];
        lay.wq = mat(cfg.d_model, cfg.d_model);
        lay.wk = mat(cfg.d_model, cfg.d_model);
        lay.wv = mat(cfg.d_model, cfg.d_model);
        lay.wo = mat(cfg.d_model, cfg.d_model);
        lay.w1 = mat(cfg.d_ff(), cfg.d_model);
        lay.w2 = mat(cfg.d_model, cfg.d_ff());
    }
    layout.total = cursor;
    return layout;
}

void transformer_forward(const TransformerConfig& cfg, std::span<const double> params,
                         std::span<const int> tokens, Activations& acts) {
    const ParamLayout layout = ParamLayout::make(cfg);
    if (params.size() != layout.total) {
        throw std::invalid_argument("parameter vector has wrong length");
    }
    const int len = static_cast<int>(tokens.size());
    if (len < 1) throw std::invalid_argument("token sequence must be non-empty");
    if (len > cfg.max_context) {
        throw std::invalid_argument("token sequence of length " + std::to_string(len) +
                                    " exceeds max context " + std::to_string(cfg.max_context));
    }
    for (int t = 0; t < len; ++t) {
        if (tokens[t] < 0 || tokens[t] >= cfg.vocab_size) {
            throw std::invalid_argument("token id out of range: " + std::to_string(tokens[t]));
        }
    }

    const int d = cfg.d_model;
    const int hd = cfg.head_dim();
    const int dff = cfg.d_ff();
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));
    const std::size_t ld = static_cast<std::size_t>(len) * d;

    acts.len = len;
    acts.emb.assign(ld, 0.0);
    acts.inv_rms0.assign(len, 0.0);
    acts.x0.assign(ld, 0.0);
    acts.layers.assign(cfg.n_layers, {});
    acts.logits = Matrix(len, cfg.vocab_size);

    for (int t = 0; t < len; ++t) {
        const double* te = params.data() + layout.wte + static_cast<std::size_t>(tokens[t]) * d;
        const double* pe = params.data() + layout.wpe + static_cast<std::size_t>(t) * d;
        double* row = acts.emb.data() + static_cast<std::size_t>(t) * d;
        for (int i = 0; i < d; ++i) row[i] = te[i] + pe[i];
        acts.inv_rms0[t] =
            rmsnorm_forward(row, acts.x0.data() + static_cast<std::size_t>(t) * d, d);
    }

    const std::vector<double>* x = &acts.x0;
    for (int l = 0; l < cfg.n_layers; ++l) {
        Activations::Layer& a = acts.layers[l];
        const ParamLayout::Layer& w = layout.layers[l];
        a.inv_rms1.assign(len, 0.0);
        a.ln1.assign(ld, 0.0);
        a.q.assign(ld, 0.0);
        a.k.assign(ld, 0.0);
        a.v.assign(ld, 0.0);
        a.att.assign(static_cast<std::size_t>(cfg.n_heads) * len * len, 0.0);
        a.heads.assign(ld, 0.0);
        a.x_mid.assign(ld, 0.0);
        a.inv_rms2.assign(len, 0.0);
        a.ln2.assign(ld, 0.0);
        a.ff_pre.assign(static_cast<std::size_t>(len) * dff, 0.0);
        a.x_out.assign(ld, 0.0);

        for (int t = 0; t < len; ++t) {
            const std::size_t td = static_cast<std::size_t>(t) * d;
            a.inv_rms1[t] = rmsnorm_forward(x->data() + td, a.ln1.data() + td, d);
            matvec(params.data() + w.wq, a.ln1.data() + td, a.q.data() + td, d, d);
            matvec(params.data() + w.wk, a.ln1.data() + td, a.k.data() + td, d, d);
            matvec(params.data() + w.wv, a.ln1.data() + td, a.v.data() + td, d, d);
        }

        for (int h = 0; h < cfg.n_heads; ++h) {
            const int hs = h * hd;
            double* att_h = a.att.data() + static_cast<std::size_t>(h) * len * len;
            for (int t = 0; t < len; ++t) {
                const double* qt = a.q.data() + static_cast<std::size_t>(t) * d + hs;
                double* att_row = att_h + static_cast<std::size_t>(t) * len;
                double max_score = -std::numeric_limits<double>::infinity();
                for (int s = 0; s <= t; ++s) {
                    const double* ks = a.k.data() + static_cast<std::size_t>(s) * d + hs;
                    double dot = 0.0;
                    for (int j = 0; j < hd; ++j) dot += qt[j] * ks[j];
                    att_row[s] = dot * att_scale;
                    max_score = std::max(max_score, att_row[s]);
                }
                double sum = 0.0;
                for (int s = 0; s <= t; ++s) {
                    att_row[s] = std::exp(att_row[s] - max_score);
                    sum += att_row[s];
                }
                const double inv_sum = 1.0 / sum;
                for (int s = 0; s <= t; ++s) att_row[s] *= inv_sum;

                double* out = a.heads.data() + static_cast<std::size_t>(t) * d + hs;
                for (int s = 0; s <= t; ++s) {
                    const double wgt = att_row[s];
                    const double* vs = a.v.data() + static_cast<std::size_t>(s) * d + hs;
                    for (int j = 0; j < hd; ++j) out[j] += wgt * vs[j];
                }
            }
        }

        for (int t = 0; t < len; ++t) {
            const std::size_t td = static_cast<std::size_t>(t) * d;
            double* mid = a.x_mid.data() + td;
            matvec(params.data() + w.wo, a.heads.data() + td, mid, d, d);
            const double* xin = x->data() + td;
            for (int i = 0; i < d; ++i) mid[i] += xin[i];

            a.inv_rms2[t] = rmsnorm_forward(mid, a.ln2.data() + td, d);
            double* pre = a.ff_pre.data() + static_cast<std::size_t>(t) * dff;
            matvec(params.data() + w.w1, a.ln2.data() + td, pre, dff, d);

            std::vector<double> act(dff);
            for (int i = 0; i < dff; ++i) act[i] = pre[i] > 0.0 ? pre[i] : 0.0;
            double* out = a.x_out.data() + td;
            matvec(params.data() + w.w2, act.data(), out, d, dff);
            for (int i = 0; i < d; ++i) out[i] += mid[i];
        }
        x = &a.x_out;
    }

    for (int t = 0; t < len; ++t) {
        matvec(params.data() + layout.lm_head, x->data() + static_cast<std::size_t>(t) * d,
               acts.logits.row(t), cfg.vocab_size, d);
    }
}

void transformer_backward(const TransformerConfig& cfg, std::span<const double> params,
                          std::span<const int> tokens, const Activations& acts,
                          std::span<const double> d_logits, std::span<const double> d_hidden,
                          std::span<double> d_params) {
    const ParamLayout layout = ParamLayout::make(cfg);
    if (params.size() != layout.total || d_params.size() != layout.total) {
        throw std::invalid_argument("parameter vector has wrong length");
    }
    const int len = acts.len;
    if (len != static_cast<int>(tokens.size())) {
        throw std::invalid_argument("activations do not match the token sequence");
    }
    const int d = cfg.d_model;
    const int hd = cfg.head_dim();
    const int dff = cfg.d_ff();
    const double att_scale = 1.0 / std::sqrt(static_cast<double>(hd));
    const std::size_t ld = static_cast<std::size_t>(len) * d;

    if (!d_logits.empty() && d_logits.size() != static_cast<std::size_t>(len) * cfg.vocab_size) {
        throw std::invalid_argument("d_logits has wrong length");
    }
    if (!d_hidden.empty() && d_hidden.size() != ld) {
        throw std::invalid_argument("d_hidden has wrong length");
    }

    // Gradient at the final hidden states: lm head backward plus any direct term.
    std::vector<double> dx(ld, 0.0);
    const std::vector<double>& hidden = acts.hidden(cfg);
    if (!d_hidden.empty()) {
        for (std::size_t i = 0; i < ld; ++i) dx[i] = d_hidden[i];
    }
    if (!d_logits.empty()) {
        for (int t = 0; t < len; ++t) {
            const std::size_t td = static_cast<std::size_t>(t) * d;
            matvec_backward(params.data() + layout.lm_head, hidden.data() + td,
                            d_logits.data() + static_cast<std::size_t>(t) * cfg.vocab_size,
                            d_params.data() + layout.lm_head, dx.data() + td, cfg.vocab_size, d);
        }
    }

    std::vector<double> d_mid(ld), d_ln2(ld), d_ff(static_cast<std::size_t>(len) * dff);
    std::vector<double> d_heads(ld), d_q(ld), d_k(ld), d_v(ld), d_ln1(ld), d_xin(ld);
    std::vector<double> act(dff), d_act(dff);

    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const Activations::Layer& a = acts.layers[l];
        const ParamLayout::Layer& w = layout.layers[l];
        const std::vector<double>& xin = l == 0 ? acts.x0 : acts.layers[l - 1].x_out;

        std::fill(d_mid.begin(), d_mid.end(), 0.0);
        std::fill(d_ln2.begin(), d_ln2.end(), 0.0);
        std::fill(d_ff.begin(), d_ff.end(), 0.0);
        std::fill(d_heads.begin(), d_heads.end(), 0.0);
        std::fill(d_q.begin(), d_q.end(), 0.0);
        std::fill(d_k.begin(), d_k.end(), 0.0);
        std::fill(d_v.begin(), d_v.end(), 0.0);
        std::fill(d_ln1.begin(), d_ln1.end(), 0.0);
        std::fill(d_xin.begin(), d_xin.end(), 0.0);

        // MLP block: x_out = x_mid + W2 relu(W1 ln2(x_mid)).
        for (int t = 0; t < len; ++t) {
            const std::size_t td = static_cast<std::size_t>(t) * d;
            const std::size_t tf = static_cast<std::size_t>(t) * dff;
            for (int i = 0; i < d; ++i) d_mid[td + i] += dx[td + i];

            const double* pre = a.ff_pre.data() + tf;
            for (int i = 0; i < dff; ++i) act[i] = pre[i] > 0.0 ? pre[i] : 0.0;
            std::fill(d_act.begin(), d_act.end(), 0.0);
            matvec_backward(params.data() + w.w2, act.data(), dx.data() + td,
                            d_params.data() + w.w2, d_act.data(), d, dff);
            for (int i = 0; i < dff; ++i) d_ff[tf + i] = pre[i] > 0.0 ? d_act[i] : 0.0;
            matvec_backward(params.data() + w.w1, a.ln2.data() + td, d_ff.data() + tf,
                            d_params.data() + w.w1, d_ln2.data() + td, dff, d);
            rmsnorm_backward(a.x_mid.data() + td, a.inv_rms2[t], d_ln2.data() + td,
                             d_mid.data() + td, d);
        }

        // Attention block: x_mid = xin + Wo heads(ln1(xin)).
        for (int t = 0; t < len; ++t) {
            const std::size_t td = static_cast<std::size_t>(t) * d;
            for (int i = 0; i < d; ++i) d_xin[td + i] += d_mid[td + i];
            matvec_backward(params.data() + w.wo, a.heads.data() + td, d_mid.data() + td,
                            d_params.data() + w.wo, d_heads.data() + td, d, d);
        }

        for (int h = 0; h < cfg.n_heads; ++h) {
            const int hs = h * hd;
            const double* att_h = a.att.data() + static_cast<std::size_t>(h) * len * len;
            std::vector<double> d_att(len);
            for (int t = 0; t < len; ++t) {
                const double* att_row = att_h + static_cast<std::size_t>(t) * len;
                const double* d_out = d_heads.data() + static_cast<std::size_t>(t) * d + hs;
                const double* qt = a.q.data() + static_cast<std::size_t>(t) * d + hs;

                double dot_av = 0.0;
                for (int s = 0; s <= t; ++s) {
                    const double* vs = a.v.data() + static_cast<std::size_t>(s) * d + hs;
                    double* dvs = d_v.data() + static_cast<std::size_t>(s) * d + hs;
                    double da = 0.0;
                    for (int j = 0; j < hd; ++j) {
                        da += d_out[j] * vs[j];
                        dvs[j] += att_row[s] * d_out[j];
                    }
                    d_att[s] = da;
                    dot_av += att_row[s] * da;
                }
                double* dqt = d_q.data() + static_cast<std::size_t>(t) * d + hs;
                for (int s = 0; s <= t; ++s) {
                    const double d_score = att_row[s] * (d_att[s] - dot_av) * att_scale;
                    if (d_score == 0.0) continue;
                    const double* ks = a.k.data() + static_cast<std::size_t>(s) * d + hs;
                    double* dks = d_k.data() + static_cast<std::size_t>(s) * d + hs;
                    for (int j = 0; j < hd; ++j) {
                        dqt[j] += d_score * ks[j];
                        dks[j] += d_score * qt[j];
                    }
                }
            }
        }

        for (int t = 0; t < len; ++t) {
            const std::size_t td = static_cast<std::size_t>(t) * d;
            matvec_backward(params.data() + w.wq, a.ln1.data() + td, d_q.data() + td,
                            d_params.data() + w.wq, d_ln1.data() + td, d, d);
            matvec_backward(params.data() + w.wk, a.ln1.data() + td, d_k.data() + td,
                            d_params.data() + w.wk, d_ln1.data() + td, d, d);
            matvec_backward(params.data() + w.wv, a.ln1.data() + td, d_v.data() + td,
                            d_params.data() + w.wv, d_ln1.data() + td, d, d);
            rmsnorm_backward(xin.data() + td, a.inv_rms1[t], d_ln1.data() + td, d_xin.data() + td,
                             d);
        }
        dx = d_xin;
    }

    // Embedding norm and table gradients.
    for (int t = 0; t < len; ++t) {
        const std::size_t td = static_cast<std::size_t>(t) * d;
        std::vector<double> d_emb(d, 0.0);
        rmsnorm_backward(acts.emb.data() + td, acts.inv_rms0[t], dx.data() + td, d_emb.data(), d);
        double* dte = d_params.data() + layout.wte + static_cast<std::size_t>(tokens[t]) * d;
        double* dpe = d_params.data() + layout.wpe + static_cast<std::size_t>(t) * d;
        for (int i = 0; i < d; ++i) {
            dte[i] += d_emb[i];
            dpe[i] += d_emb[i];
        }
    }
}

}  // namespace lethe
