#include "lethe/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "lethe/numerics.hpp"

namespace lethe {

namespace {

constexpr double kProbFloor = 1e-12;

// Token ids for x followed by y, plus the split point.
struct TeacherForced {
    std::vector<int> tokens;
    int x_len{0};
    int y_len{0};
};

TeacherForced encode_pair(const ModelHandle& model, const std::string& x, const std::string& y) {
    TeacherForced tf;
    tf.tokens = model.tokenizer().encode(x);
    tf.x_len = static_cast<int>(tf.tokens.size());
    const std::vector<int> y_tokens = model.tokenizer().encode(y);
    tf.y_len = static_cast<int>(y_tokens.size());
    if (tf.x_len < 1) throw std::invalid_argument("prompt encodes to zero tokens");
    if (tf.y_len < 1) throw std::invalid_argument("target text encodes to zero tokens");
    tf.tokens.insert(tf.tokens.end(), y_tokens.begin(), y_tokens.end());
    return tf;
}

double kl_row(const double* p, const double* q, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        if (p[i] == 0.0) continue;
        const double pi = std::max(p[i], kProbFloor);
        const double qi = std::max(q[i], kProbFloor);
        acc += p[i] * (std::log(pi) - std::log(qi));
    }
    return acc;
}

}  // namespace

double negative_loss(const ModelHandle& model, const std::string& x, const std::string& y) {
    const TeacherForced tf = encode_pair(model, x, y);
    const Matrix logits = model.forward_logits(tf.tokens);
    double ce = 0.0;
    for (int k = 0; k < tf.y_len; ++k) {
        const int row = tf.x_len - 1 + k;
        const int target = tf.tokens[row + 1];
        const double* l = logits.row(row);
        ce += log_sum_exp(l, logits.cols) - l[target];
    }
    return -(ce / tf.y_len);
}

TermGrad negative_loss_grad(const ModelHandle& model, const std::string& x, const std::string& y) {
    const TeacherForced tf = encode_pair(model, x, y);
    const Matrix logits = model.forward_logits(tf.tokens);
    const int vocab = logits.cols;
    std::vector<double> d_logits(static_cast<std::size_t>(logits.rows) * vocab, 0.0);
    std::vector<double> probs(vocab);
    double ce = 0.0;
    for (int k = 0; k < tf.y_len; ++k) {
        const int row = tf.x_len - 1 + k;
        const int target = tf.tokens[row + 1];
        const double* l = logits.row(row);
        ce += log_sum_exp(l, vocab) - l[target];
        softmax_row(l, probs.data(), vocab);
        double* dl = d_logits.data() + static_cast<std::size_t>(row) * vocab;
        // d(-CE/|y|)/dlogit = -(softmax - onehot)/|y|
        for (int i = 0; i < vocab; ++i) dl[i] = -probs[i] / tf.y_len;
        dl[target] += 1.0 / tf.y_len;
    }
    TermGrad out;
    out.value = -(ce / tf.y_len);
    out.grad = model.backward(tf.tokens, d_logits, {});
    return out;
}

ClusterCenter cluster_center(const ModelHandle& model, const Corpus& good) {
    if (good.empty()) throw std::invalid_argument("exemplar corpus is empty");
    ClusterCenter cc;
    cc.center.assign(model.hidden_size(), 0.0);
    for (const Sample& s : good.samples) {
        const std::vector<double> v = phi(model, s.response);
        for (int i = 0; i < model.hidden_size(); ++i) cc.center[i] += v[i];
    }
    for (double& v : cc.center) v /= static_cast<double>(good.size());
    cc.source_count = static_cast<int>(good.size());
    return cc;
}

double align_loss_fixed(const ModelHandle& model, const std::string& text,
                        const ClusterCenter& center) {
    if (static_cast<int>(center.center.size()) != model.hidden_size()) {
        throw std::invalid_argument("cluster center dimension does not match model hidden size");
    }
    const std::vector<double> v = phi(model, text);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - center.center[i];
        acc += d * d;
    }
    return acc;
}

TermGrad align_loss_fixed_grad(const ModelHandle& model, const std::string& text,
                               const ClusterCenter& center) {
    if (static_cast<int>(center.center.size()) != model.hidden_size()) {
        throw std::invalid_argument("cluster center dimension does not match model hidden size");
    }
    const std::vector<int> tokens = model.tokenizer().encode(text);
    if (tokens.empty()) throw std::invalid_argument("text encodes to zero tokens");
    const Matrix hidden = model.forward_hidden(tokens);
    const int d = hidden.cols;
    const int len = hidden.rows;
    std::vector<double> mean(d, 0.0);
    for (int t = 0; t < len; ++t) {
        const double* row = hidden.row(t);
        for (int i = 0; i < d; ++i) mean[i] += row[i];
    }
    for (double& v : mean) v /= len;

    double value = 0.0;
    std::vector<double> d_hidden(static_cast<std::size_t>(len) * d);
    for (int i = 0; i < d; ++i) {
        const double diff = mean[i] - center.center[i];
        value += diff * diff;
        // d||mean - C||^2 / d hidden[t][i] = 2 (mean_i - C_i) / len
        const double g = 2.0 * diff / len;
        for (int t = 0; t < len; ++t) d_hidden[static_cast<std::size_t>(t) * d + i] = g;
    }
    TermGrad out;
    out.value = value;
    out.grad = model.backward(tokens, {}, d_hidden);
    return out;
}

double align_loss(const ModelHandle& model, const std::string& x, const ClusterCenter& center,
                  int max_new) {
    const std::string gen = generate(model, x, max_new);
    if (gen.empty()) return 0.0;
    return align_loss_fixed(model, gen, center);
}

std::vector<int> derive_pseudo_labels(const Matrix& center_scores) {
    if (center_scores.rows < 1 || center_scores.cols < 1) {
        throw std::invalid_argument("score matrix is empty");
    }
    std::vector<int> labels(center_scores.rows);
    for (int t = 0; t < center_scores.rows; ++t) {
        labels[t] = argmax_row(center_scores.row(t), center_scores.cols);
    }
    return labels;
}

double kl_preservation_loss(const DistributionPair& pair) {
    if (pair.p.rows != pair.q.rows || pair.p.cols != pair.q.cols) {
        throw std::invalid_argument("distribution pair shape mismatch");
    }
    if (pair.p.rows < 1 || pair.p.cols < 1) {
        throw std::invalid_argument("distribution pair is empty");
    }
    for (const Matrix* m : {&pair.p, &pair.q}) {
        for (int t = 0; t < m->rows; ++t) {
            const double* row = m->row(t);
            double sum = 0.0;
            for (int i = 0; i < m->cols; ++i) {
                if (row[i] < 0.0) {
                    throw std::invalid_argument("distribution row " + std::to_string(t) +
                                                " has a negative entry");
                }
                sum += row[i];
            }
            if (std::abs(sum - 1.0) > 1e-6) {
                throw std::invalid_argument("distribution row " + std::to_string(t) +
                                            " is not normalized");
            }
        }
    }
    double acc = 0.0;
    for (int t = 0; t < pair.p.rows; ++t) {
        acc += kl_row(pair.p.row(t), pair.q.row(t), pair.p.cols);
    }
    return acc / pair.p.rows;
}

DistributionPair distribution_pair(const ModelHandle& reference, const ModelHandle& model,
                                   std::span<const int> tokens) {
    const Matrix ref_logits = reference.forward_logits(tokens);
    const Matrix mod_logits = model.forward_logits(tokens);
    DistributionPair pair;
    pair.p = Matrix(ref_logits.rows, ref_logits.cols);
    pair.q = Matrix(mod_logits.rows, mod_logits.cols);
    for (int t = 0; t < ref_logits.rows; ++t) {
        softmax_row(ref_logits.row(t), pair.p.row(t), ref_logits.cols);
        softmax_row(mod_logits.row(t), pair.q.row(t), mod_logits.cols);
    }
    return pair;
}

double kl_retention(const ModelHandle& reference, const ModelHandle& model, const std::string& x,
                    const std::string& y) {
    const std::vector<int> tokens = model.tokenizer().encode(x + y);
    if (tokens.empty()) throw std::invalid_argument("retain sample encodes to zero tokens");
    return kl_preservation_loss(distribution_pair(reference, model, tokens));
}

TermGrad kl_retention_grad(const ModelHandle& reference, const ModelHandle& model,
                           const std::string& x, const std::string& y) {
    const std::vector<int> tokens = model.tokenizer().encode(x + y);
    if (tokens.empty()) throw std::invalid_argument("retain sample encodes to zero tokens");
    const DistributionPair pair = distribution_pair(reference, model, tokens);

    double value = 0.0;
    const int len = pair.p.rows;
    const int vocab = pair.p.cols;
    std::vector<double> d_logits(static_cast<std::size_t>(len) * vocab);
    for (int t = 0; t < len; ++t) {
        const double* p = pair.p.row(t);
        const double* q = pair.q.row(t);
        value += kl_row(p, q, vocab);
        // dKL/dlogit_q = (q - p) per row, mean over rows.
        double* dl = d_logits.data() + static_cast<std::size_t>(t) * vocab;
        for (int i = 0; i < vocab; ++i) dl[i] = (q[i] - p[i]) / len;
    }
    TermGrad out;
    out.value = value / len;
    out.grad = model.backward(tokens, d_logits, {});
    return out;
}

LossBreakdown composite_loss(const ModelHandle& model, const ModelHandle& reference,
                             const Sample& sample, const ClusterCenter& center,
                             std::span<const Sample> retain_batch, double w_neg, double w_align,
                             double w_kl, int align_max_new) {
    if (!reference.frozen()) throw std::invalid_argument("reference model must be frozen");
    if (w_neg < 0.0 || w_align < 0.0 || w_kl < 0.0) {
        throw std::invalid_argument("loss weights must be non-negative");
    }
    LossBreakdown out;
    out.w_neg = w_neg;
    out.w_align = w_align;
    out.w_kl = w_kl;
    if (w_neg > 0.0) out.negative = negative_loss(model, sample.prompt, sample.response);
    if (w_align > 0.0) out.align = align_loss(model, sample.prompt, center, align_max_new);
    if (w_kl > 0.0 && !retain_batch.empty()) {
        double acc = 0.0;
        for (const Sample& r : retain_batch) {
            acc += kl_retention(reference, model, r.prompt, r.response);
        }
        out.kl = acc / static_cast<double>(retain_batch.size());
    }
    out.total = w_neg * out.negative + w_align * out.align + w_kl * out.kl;
    return out;
}

}  // namespace lethe
