#include "lethe/model.hpp"

#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "lethe/numerics.hpp"

namespace lethe {

namespace {

void check_tokenizer(const TransformerConfig& cfg, const CharTokenizer& tok) {
    if (cfg.vocab_size != tok.vocab_size()) {
        throw std::invalid_argument("model vocab size " + std::to_string(cfg.vocab_size) +
                                    " does not match tokenizer vocab size " +
                                    std::to_string(tok.vocab_size()));
    }
}

}  // namespace

ToyTransformerModel::ToyTransformerModel(TransformerConfig cfg, CharTokenizer tok,
                                         std::uint64_t seed, double init_std)
    : cfg_(cfg), tok_(std::move(tok)) {
    cfg_.validate();
    check_tokenizer(cfg_, tok_);
    const ParamLayout layout = ParamLayout::make(cfg_);
    params_.assign(layout.total, 0.0);
    if (init_std > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> dist(0.0, init_std);
        for (double& p : params_) p = dist(rng);
    }
}

ToyTransformerModel::ToyTransformerModel(TransformerConfig cfg, CharTokenizer tok,
                                         std::vector<double> params, bool frozen)
    : cfg_(cfg), tok_(std::move(tok)), params_(std::move(params)), frozen_(frozen) {
    cfg_.validate();
    check_tokenizer(cfg_, tok_);
    const ParamLayout layout = ParamLayout::make(cfg_);
    if (params_.size() != layout.total) {
        throw std::invalid_argument("parameter vector has wrong length for config");
    }
}

std::span<double> ToyTransformerModel::mutable_trainable_params() {
    if (frozen_) throw std::runtime_error("model is frozen; parameters are read-only");
    return params_;
}

Matrix ToyTransformerModel::forward_logits(std::span<const int> tokens) const {
    transformer_forward(cfg_, params_, tokens, scratch_);
    return scratch_.logits;
}

Matrix ToyTransformerModel::forward_hidden(std::span<const int> tokens) const {
    transformer_forward(cfg_, params_, tokens, scratch_);
    const std::vector<double>& h = scratch_.hidden(cfg_);
    Matrix out(scratch_.len, cfg_.d_model);
    out.data = h;
    return out;
}

std::vector<double> ToyTransformerModel::backward(std::span<const int> tokens,
                                                  std::span<const double> d_logits,
                                                  std::span<const double> d_hidden) const {
    transformer_forward(cfg_, params_, tokens, scratch_);
    std::vector<double> grad(params_.size(), 0.0);
    transformer_backward(cfg_, params_, tokens, scratch_, d_logits, d_hidden, grad);
    return grad;
}

std::unique_ptr<ModelHandle> ToyTransformerModel::clone_frozen() const {
    return std::make_unique<ToyTransformerModel>(cfg_, tok_, params_, true);
}

std::unique_ptr<ModelHandle> ToyTransformerModel::clone_trainable() const {
    return std::make_unique<ToyTransformerModel>(cfg_, tok_, params_, false);
}

void ToyTransformerModel::save_checkpoint(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["kind"] = "toy_transformer";
    manifest["config"] = {{"n_layers", cfg_.n_layers},
                          {"n_heads", cfg_.n_heads},
                          {"d_model", cfg_.d_model},
                          {"max_context", cfg_.max_context},
                          {"vocab_size", cfg_.vocab_size}};
    manifest["alphabet"] = tok_.alphabet();
    manifest["param_count"] = params_.size();
    {
        std::ofstream out(dir / "manifest.json");
        if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
        out << manifest.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "weights.bin", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir / "weights.bin").string());
        out.write(reinterpret_cast<const char*>(params_.data()),
                  static_cast<std::streamsize>(params_.size() * sizeof(double)));
        if (!out) throw std::runtime_error("failed writing " + (dir / "weights.bin").string());
    }
}

std::unique_ptr<ToyTransformerModel> ToyTransformerModel::load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw std::runtime_error("cannot read " + (dir / "manifest.json").string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("invalid checkpoint manifest in " + dir.string() + ": " +
                                 e.what());
    }
    if (manifest.value("format_version", 0) != 1) {
        throw std::runtime_error("unsupported checkpoint format version in " + dir.string());
    }
    if (manifest.value("kind", "") != "toy_transformer") {
        throw std::runtime_error("unsupported checkpoint kind in " + dir.string());
    }
    const auto& c = manifest.at("config");
    TransformerConfig cfg;
    cfg.n_layers = c.at("n_layers").get<int>();
    cfg.n_heads = c.at("n_heads").get<int>();
    cfg.d_model = c.at("d_model").get<int>();
    cfg.max_context = c.at("max_context").get<int>();
    cfg.vocab_size = c.at("vocab_size").get<int>();
    CharTokenizer tok(manifest.at("alphabet").get<std::string>());

    const ParamLayout layout = ParamLayout::make(cfg);
    std::ifstream win(dir / "weights.bin", std::ios::binary | std::ios::ate);
    if (!win) throw std::runtime_error("cannot read " + (dir / "weights.bin").string());
    const auto bytes = static_cast<std::size_t>(win.tellg());
    if (bytes != layout.total * sizeof(double)) {
        throw std::runtime_error("weights.bin size mismatch in " + dir.string());
    }
    std::vector<double> params(layout.total);
    win.seekg(0);
    win.read(reinterpret_cast<char*>(params.data()), static_cast<std::streamsize>(bytes));
    if (!win) throw std::runtime_error("failed reading " + (dir / "weights.bin").string());
    return std::make_unique<ToyTransformerModel>(cfg, std::move(tok), std::move(params), false);
}

ModelPtr load_checkpoint(const std::filesystem::path& dir) {
    return ToyTransformerModel::load(dir);
}

std::vector<double> phi(const ModelHandle& model, const std::string& text) {
    const std::vector<int> tokens = model.tokenizer().encode(text);
    if (tokens.empty()) {
        throw std::invalid_argument("text encodes to zero tokens; feature vector undefined");
    }
    const Matrix hidden = model.forward_hidden(tokens);
    std::vector<double> mean(hidden.cols, 0.0);
    for (int t = 0; t < hidden.rows; ++t) {
        const double* row = hidden.row(t);
        for (int i = 0; i < hidden.cols; ++i) mean[i] += row[i];
    }
    for (double& v : mean) v /= hidden.rows;
    return mean;
}

std::string generate(const ModelHandle& model, const std::string& prompt, int max_new,
                     std::optional<std::uint64_t> seed) {
    if (max_new < 1) throw std::invalid_argument("max_new must be >= 1");
    std::vector<int> tokens = model.tokenizer().encode(prompt);
    if (tokens.empty()) {
        throw std::invalid_argument("prompt must encode to at least one token");
    }
    if (static_cast<int>(tokens.size()) > model.max_context()) {
        throw std::invalid_argument("prompt of " + std::to_string(tokens.size()) +
                                    " tokens exceeds max context " +
                                    std::to_string(model.max_context()));
    }

    std::mt19937_64 rng(seed.value_or(0));
    const int eos = model.tokenizer().eos_id();
    const int vocab = model.vocab_size();
    std::vector<int> out;
    std::vector<double> probs(vocab);
    for (int step = 0; step < max_new; ++step) {
        // Stop once the context is full so prompt + continuation always fits
        // back through the model (the alignment and fluency paths re-encode it).
        if (static_cast<int>(tokens.size()) >= model.max_context()) break;
        const Matrix logits = model.forward_logits(tokens);
        const double* row = logits.row(logits.rows - 1);
        int next;
        if (!seed) {
            next = argmax_row(row, vocab);
        } else {
            softmax_row(row, probs.data(), vocab);
            const double u = (rng() >> 11) * 0x1.0p-53;
            double acc = 0.0;
            next = vocab - 1;
            for (int i = 0; i < vocab; ++i) {
                acc += probs[i];
                if (u < acc) {
                    next = i;
                    break;
                }
            }
        }
        if (next == eos) break;
        tokens.push_back(next);
        out.push_back(next);
    }
    return model.tokenizer().decode(out);
}

}  // namespace lethe
