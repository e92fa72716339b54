#include "lethe/pretrain.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lethe/numerics.hpp"

namespace lethe {

namespace {

struct SampleTokens {
    std::vector<int> tokens;  // prompt + response + eos
    int prompt_len{0};
};

}  // namespace

PretrainResult memorize_corpus(ModelHandle& model, const Corpus& corpus, int max_epochs,
                               double lr) {
    if (corpus.empty()) throw std::invalid_argument("cannot memorize an empty corpus");
    if (model.frozen()) throw std::runtime_error("cannot train a frozen model");

    const CharTokenizer& tok = model.tokenizer();
    std::vector<SampleTokens> prepared;
    for (const Sample& s : corpus.samples) {
        SampleTokens st;
        st.tokens = tok.encode(s.prompt);
        st.prompt_len = static_cast<int>(st.tokens.size());
        if (st.prompt_len < 1) {
            throw std::invalid_argument("sample '" + s.id + "' has an empty prompt");
        }
        const std::vector<int> resp = tok.encode(s.response);
        if (resp.empty()) {
            throw std::invalid_argument("sample '" + s.id + "' has an empty response");
        }
        st.tokens.insert(st.tokens.end(), resp.begin(), resp.end());
        st.tokens.push_back(tok.eos_id());
        if (static_cast<int>(st.tokens.size()) > model.max_context()) {
            throw std::invalid_argument("sample '" + s.id + "' exceeds the model context");
        }
        prepared.push_back(std::move(st));
    }

    const std::size_t n_params = model.trainable_count();
    std::vector<double> m(n_params, 0.0), v(n_params, 0.0);
    const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
    long long t = 0;

    auto fully_memorized = [&]() {
        for (const Sample& s : corpus.samples) {
            const int budget = static_cast<int>(s.response.size()) + 4;
            if (generate(model, s.prompt, budget) != s.response) return false;
        }
        return true;
    };

    PretrainResult result;
    const int vocab = model.vocab_size();
    for (int epoch = 0; epoch < max_epochs; ++epoch) {
        double loss_acc = 0.0;
        for (const SampleTokens& st : prepared) {
            const int len = static_cast<int>(st.tokens.size());
            const Matrix logits = model.forward_logits(st.tokens);
            const int n_pred = len - st.prompt_len;  // response tokens + eos
            std::vector<double> d_logits(static_cast<std::size_t>(len) * vocab, 0.0);
            std::vector<double> probs(vocab);
            double ce = 0.0;
            for (int k = 0; k < n_pred; ++k) {
                const int row = st.prompt_len - 1 + k;
                const int target = st.tokens[row + 1];
                const double* l = logits.row(row);
                ce += log_sum_exp(l, vocab) - l[target];
                softmax_row(l, probs.data(), vocab);
                double* dl = d_logits.data() + static_cast<std::size_t>(row) * vocab;
                for (int i = 0; i < vocab; ++i) dl[i] = probs[i] / n_pred;
                dl[target] -= 1.0 / n_pred;
            }
            loss_acc += ce / n_pred;

            const std::vector<double> grad = model.backward(st.tokens, d_logits, {});
            ++t;
            const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
            const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
            std::span<double> params = model.mutable_trainable_params();
            for (std::size_t i = 0; i < n_params; ++i) {
                m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
                v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
                params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + adam_eps);
            }
        }
        result.epochs = epoch + 1;
        result.final_loss = loss_acc / static_cast<double>(prepared.size());
        if (!std::isfinite(result.final_loss)) {
            throw std::runtime_error("non-finite loss while memorizing, epoch " +
                                     std::to_string(epoch + 1));
        }
        if (result.final_loss < 0.5 && fully_memorized()) {
            result.memorized = true;
            break;
        }
    }
    if (!result.memorized) result.memorized = fully_memorized();
    return result;
}

}  // namespace lethe
