// Acceptance harness: drives the bundled pipeline end to end and checks every
// release criterion at its stated tolerance. Prints exactly one [PASS]/[FAIL]
// line per criterion and exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lethe/cli.hpp"
#include "lethe/demo.hpp"
#include "lethe/eval.hpp"
#include "lethe/losses.hpp"
#include "lethe/numerics.hpp"
#include "lethe/pretrain.hpp"
#include "lethe/scorer.hpp"
#include "lethe/trainer.hpp"

using namespace lethe;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    if (!pass) ++g_failures;
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << name << " — "
              << detail << "\n"
              << std::flush;
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

TransformerConfig tiny_config() {
    TransformerConfig cfg;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_model = 16;
    cfg.max_context = 32;
    cfg.vocab_size = 97;
    return cfg;
}

ModelPtr tiny_model(std::uint64_t seed, double init_std = 0.08) {
    return std::make_unique<ToyTransformerModel>(tiny_config(), CharTokenizer::ascii(), seed,
                                                 init_std);
}

Sample make_sample(const std::string& id, const std::string& prompt,
                   const std::string& response) {
    Sample s;
    s.id = id;
    s.prompt = prompt;
    s.response = response;
    return s;
}

CorpusPartition tiny_partition() {
    CorpusPartition p;
    p.unlearn_set.name = "u";
    p.unlearn_set.samples = {make_sample("u1", "secret one is ", "XKCD"),
                             make_sample("u2", "secret two is ", "QRST")};
    p.good_set.name = "g";
    p.good_set.samples = {make_sample("g1", "hello", " world")};
    p.retain_set = p.good_set;
    return p;
}

std::optional<double> find_metric(const EvalReport& report, const std::string& role,
                                  const std::string& variant, MetricKind kind) {
    for (const EvalRow& row : report.rows) {
        if (row.role != role || row.variant != variant) continue;
        for (const MetricRecord& rec : row.records) {
            if (rec.metric == kind) return rec.value;
        }
    }
    return std::nullopt;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

// Redirects std::cout into a sink so nested commands don't interleave their
// progress lines with the criterion verdicts.
struct QuietCout {
    std::ostringstream sink;
    std::streambuf* saved;
    QuietCout() : saved(std::cout.rdbuf(sink.rdbuf())) {}
    ~QuietCout() { std::cout.rdbuf(saved); }
};

// Central-difference slope of `loss` along parameter coordinate i.
template <typename Loss>
double fd_slope(ModelHandle& model, std::size_t i, const Loss& loss, double h = 1e-4) {
    auto params = model.mutable_trainable_params();
    const double saved = params[i];
    params[i] = saved + h;
    const double up = loss();
    model.mutable_trainable_params()[i] = saved - h;
    const double down = loss();
    model.mutable_trainable_params()[i] = saved;
    return (up - down) / (2.0 * h);
}

template <typename Loss>
bool gradcheck(ModelHandle& model, const std::vector<double>& grad, const Loss& loss,
               std::mt19937_64& rng, double& worst) {
    bool ok = true;
    for (int k = 0; k < 20; ++k) {
        const std::size_t i = rng() % grad.size();
        const double fd = fd_slope(model, i, loss);
        const double rel =
            std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), 1e-8});
        worst = std::max(worst, rel);
        ok = ok && rel <= 1e-3;
    }
    return ok;
}

// Shared products of the full-scale run, reused across criteria 1, 2, and 8.
struct DemoScale {
    Corpus secrets;
    Corpus normals;
    ModelPtr origin;      // frozen snapshot of the memorized model
    CorpusPartition partition;
    ScorerPtr scorer;
    SimilarityPtr sim;
    RunResult unlearned;  // default-config run
    EvalReport eval;      // origin vs unlearned, retain + unlearn roles
    double leak_before{-1.0};
    double leak_after{-1.0};
    double fluency_origin{0.0};
    double fluency_unlearned{0.0};
    double elapsed_s{0.0};
    bool memorized{false};
};

DemoScale build_and_unlearn() {
    DemoScale d;
    const auto t0 = Clock::now();

    d.secrets = make_secret_corpus(20, 7);
    d.normals = make_normal_corpus();
    const Corpus mixed = merge_disjoint(d.secrets, d.normals);

    auto model = std::make_unique<ToyTransformerModel>(demo_model_config(),
                                                       CharTokenizer::ascii(), 7, 0.08);
    const PretrainResult pre = memorize_corpus(*model, mixed, 400, 2e-3);
    d.memorized = pre.memorized;
    d.leak_before = leak_rate(*model, d.secrets);
    d.origin = model->clone_frozen();

    std::vector<std::string> blocklist;
    for (const Sample& s : d.secrets.samples) blocklist.push_back(*s.secret);
    d.scorer = keyword_scorer(std::move(blocklist));
    d.sim = token_f1_similarity();

    DiscriminationResult disc = discriminate(mixed, *model, *d.scorer, 0.0, d.normals, 64);
    d.partition = std::move(disc.partition);

    d.unlearned = run_unlearning(std::move(model), *d.origin, d.partition, TrainConfig{});
    d.leak_after = leak_rate(*d.unlearned.model, d.secrets);

    const std::vector<VariantEntry> variants = {{"origin", d.origin.get()},
                                                {"unlearned", d.unlearned.model.get()}};
    d.eval = evaluate_variants(variants, d.partition, *d.scorer, *d.sim, *d.origin, 20, 7);
    d.fluency_origin = find_metric(d.eval, "retain", "origin", MetricKind::fluency).value_or(0.0);
    d.fluency_unlearned =
        find_metric(d.eval, "retain", "unlearned", MetricKind::fluency).value_or(1e9);

    d.elapsed_s = seconds_since(t0);
    return d;
}

void criterion_1(const DemoScale& d) {
    const int steps = d.unlearned.state.step;
    const double ratio = d.fluency_unlearned / d.fluency_origin;
    const bool pass = d.memorized && d.leak_before == 1.0 && d.leak_after == 0.0 &&
                      steps <= 200 && ratio <= 1.5 && d.elapsed_s <= 300.0;
    std::ostringstream detail;
    detail << "leak " << fmt(d.leak_before, 2) << " -> " << fmt(d.leak_after, 2) << " in "
           << steps << " steps (limit 200); retain fluency " << fmt(d.fluency_origin) << " -> "
           << fmt(d.fluency_unlearned) << " (x" << fmt(ratio, 3) << ", limit x1.5); "
           << fmt(d.elapsed_s, 1) << "s of 300s";
    report(1, "default-config unlearning on the memorized demo model", pass, detail.str());
}

void criterion_2(const DemoScale& d) {
    const double sim_origin =
        find_metric(d.eval, "unlearn", "origin", MetricKind::similarity).value_or(-1.0);
    const double sim_unlearned =
        find_metric(d.eval, "unlearn", "unlearned", MetricKind::similarity).value_or(1e9);
    const bool pass = sim_origin == 1.0 && sim_unlearned <= 0.7;
    std::ostringstream detail;
    detail << "unlearn-set similarity " << fmt(sim_origin) << " -> " << fmt(sim_unlearned)
           << " (limit 0.7)";
    report(2, "generations diverge from the memorized targets", pass, detail.str());
}

void criterion_3() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    bool ok = true;

    {
        ModelPtr m = tiny_model(30);
        const TermGrad g = negative_loss_grad(*m, "probe question ", "answer");
        ok = gradcheck(*m, g.grad,
                       [&] { return negative_loss(*m, "probe question ", "answer"); }, rng,
                       worst) &&
             ok;
    }
    {
        ModelPtr m = tiny_model(31);
        ClusterCenter center;
        center.center.assign(16, 0.05);
        const TermGrad g = align_loss_fixed_grad(*m, "some generation", center);
        ok = gradcheck(*m, g.grad,
                       [&] { return align_loss_fixed(*m, "some generation", center); }, rng,
                       worst) &&
             ok;
    }
    {
        ModelPtr m = tiny_model(32);
        const ModelPtr ref = tiny_model(33)->clone_frozen();
        const TermGrad g = kl_retention_grad(*ref, *m, "keep this ", "fact");
        ok = gradcheck(*m, g.grad, [&] { return kl_retention(*ref, *m, "keep this ", "fact"); },
                       rng, worst) &&
             ok;
    }

    const double elapsed = seconds_since(t0);
    ok = ok && elapsed <= 60.0;
    std::ostringstream detail;
    detail << "3 losses x 20 coordinates on a 6688-parameter model, worst rel err "
           << fmt(worst, 6) << " (limit 1e-3); " << fmt(elapsed, 1) << "s of 60s";
    report(3, "analytic gradients match finite differences", ok, detail.str());
}

void criterion_4() {
    std::mt19937_64 rng(55);
    bool ok = true;

    // D(P || P) = 0 within 1e-9 for a random distribution.
    Matrix p(4, 9);
    std::uniform_real_distribution<double> uni(0.01, 1.0);
    for (int r = 0; r < p.rows; ++r) {
        double sum = 0.0;
        for (int c = 0; c < p.cols; ++c) {
            p.at(r, c) = uni(rng);
            sum += p.at(r, c);
        }
        for (int c = 0; c < p.cols; ++c) p.at(r, c) /= sum;
    }
    DistributionPair self;
    self.p = p;
    self.q = p;
    const double d_self = kl_preservation_loss(self);
    ok = ok && std::abs(d_self) <= 1e-9;

    // Non-negativity over 1000 random pairs.
    double min_seen = 1e300;
    for (int i = 0; i < 1000; ++i) {
        DistributionPair pair;
        pair.p = Matrix(1, 7);
        pair.q = Matrix(1, 7);
        double sp = 0.0, sq = 0.0;
        for (int c = 0; c < 7; ++c) {
            pair.p.at(0, c) = uni(rng);
            pair.q.at(0, c) = uni(rng);
            sp += pair.p.at(0, c);
            sq += pair.q.at(0, c);
        }
        for (int c = 0; c < 7; ++c) {
            pair.p.at(0, c) /= sp;
            pair.q.at(0, c) /= sq;
        }
        const double d = kl_preservation_loss(pair);
        min_seen = std::min(min_seen, d);
        ok = ok && d >= 0.0;
    }

    // D((1,0) || (.5,.5)) = log 2 within 1e-9.
    DistributionPair half;
    half.p = Matrix(1, 2);
    half.p.at(0, 0) = 1.0;
    half.q = Matrix(1, 2);
    half.q.at(0, 0) = 0.5;
    half.q.at(0, 1) = 0.5;
    const double d_half = kl_preservation_loss(half);
    ok = ok && std::abs(d_half - std::log(2.0)) <= 1e-9;

    std::ostringstream detail;
    detail << "self-divergence " << fmt(d_self, 12) << "; min over 1000 random pairs "
           << fmt(min_seen, 6) << "; two-point case off by "
           << fmt(std::abs(d_half - std::log(2.0)), 12);
    report(4, "forward KL identities", ok, detail.str());
}

void criterion_5() {
    bool ok = true;
    std::ostringstream detail;

    const std::vector<std::string> texts = {"a a a a"};
    const double div = diversity(texts);
    ok = ok && div == 0.25;

    const ToyTransformerModel uniform(tiny_config(), CharTokenizer::ascii(), 0, 0.0);
    const double flu = fluency(uniform, "question?", " answer");
    ok = ok && std::abs(flu - 97.0) <= 1e-6;

    const SimilarityPtr sim = token_f1_similarity();
    const double s = similarity("identical response text", "identical response text", *sim);
    ok = ok && s == 1.0;

    // Constant generator answering "aaa...": exactly half the probes leak.
    const TransformerConfig cfg = tiny_config();
    const ParamLayout layout = ParamLayout::make(cfg);
    std::vector<double> params(layout.total, 0.0);
    for (int t = 0; t < cfg.vocab_size; ++t) {
        params[layout.wte + static_cast<std::size_t>(t) * cfg.d_model] = 1.0;
    }
    const int a_id = CharTokenizer::ascii().encode("a")[0];
    params[layout.lm_head + static_cast<std::size_t>(a_id) * cfg.d_model] = 1.0;
    const ToyTransformerModel gen_a(cfg, CharTokenizer::ascii(), std::move(params), false);
    Corpus probes;
    probes.name = "probes";
    const char* secrets[4] = {"aaa", "AAA", "zzz", "b7"};
    for (int i = 0; i < 4; ++i) {
        Sample s2 = make_sample("p" + std::to_string(i), "code: ", secrets[i]);
        s2.secret = secrets[i];
        probes.samples.push_back(s2);
    }
    const double leak = leak_rate(gen_a, probes);
    ok = ok && leak == 0.5;

    detail << "diversity(\"a a a a\") = " << fmt(div, 2) << "; uniform-model fluency = "
           << fmt(flu, 8) << "; identical-text similarity = " << fmt(s, 2)
           << "; leak fraction 2/4 = " << fmt(leak, 2);
    report(5, "metric exactness", ok, detail.str());
}

void criterion_6() {
    bool ok = true;

    ModelPtr model = tiny_model(40);
    const std::vector<double> before(model->trainable_params().begin(),
                                     model->trainable_params().end());
    std::vector<double> zero(model->trainable_count(), 0.0);
    apply_update(*model, zero, 1e-2);
    std::vector<double> ones(model->trainable_count(), 1.0);
    apply_update(*model, ones, 0.0);
    const auto now = model->trainable_params();
    ok = ok && std::equal(before.begin(), before.end(), now.begin());

    int increases = 0;
    const Sample s = make_sample("s", "passphrase: ", "opal-939");
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        for (double alpha : {1e-3, 1e-2}) {
            ModelPtr m = tiny_model(seed);
            const double ce_before = -negative_loss(*m, s.prompt, s.response);
            const TermGrad g = negative_loss_grad(*m, s.prompt, s.response);
            apply_update(*m, g.grad, alpha);
            const double ce_after = -negative_loss(*m, s.prompt, s.response);
            if (ce_after > ce_before) ++increases;
        }
    }
    ok = ok && increases == 20;

    std::ostringstream detail;
    detail << "no-op updates bitwise stable; cross-entropy rose strictly in " << increases
           << "/20 single-step runs";
    report(6, "update rule identities", ok, detail.str());
}

void criterion_7() {
    bool ok = true;
    std::ostringstream detail;

    // (a) Everything already past the threshold: stop after one evaluation
    // pass, no updates.
    {
        const ModelPtr origin = tiny_model(41);
        const ModelPtr reference = origin->clone_frozen();
        TrainConfig c;
        c.objective_threshold = -1.0;
        RunResult r = run_unlearning(origin->clone_trainable(), *reference, tiny_partition(), c);
        ok = ok && r.state.stopped_early && r.state.step == 0;
        detail << "pre-satisfied stop: early=" << (r.state.stopped_early ? "yes" : "no")
               << " steps=" << r.state.step;
    }

    // (b) Weight-1 bypass must be indistinguishable from no bypass, bitwise.
    {
        const ModelPtr origin = tiny_model(42);
        const ModelPtr reference = origin->clone_frozen();
        const CorpusPartition partition = tiny_partition();
        const double ce1 = -negative_loss(*origin, "secret one is ", "XKCD");
        const double ce2 = -negative_loss(*origin, "secret two is ", "QRST");

        TrainConfig a;
        a.alpha = 5e-3;
        a.max_epochs = 3;
        a.batch_size = 4;
        a.align_max_new = 8;
        a.bypass_weight = 1.0;
        a.objective_threshold = (ce1 + ce2) / 2.0;
        TrainConfig b = a;
        b.bypass_enabled = false;
        b.bypass_weight = 0.05;

        RunResult ra = run_unlearning(origin->clone_trainable(), *reference, partition, a);
        RunResult rb = run_unlearning(origin->clone_trainable(), *reference, partition, b);
        bool equal = ra.state.loss_history.size() == rb.state.loss_history.size();
        for (std::size_t i = 0; equal && i < ra.state.loss_history.size(); ++i) {
            equal = ra.state.loss_history[i].negative == rb.state.loss_history[i].negative &&
                    ra.state.loss_history[i].align == rb.state.loss_history[i].align &&
                    ra.state.loss_history[i].kl == rb.state.loss_history[i].kl &&
                    ra.state.loss_history[i].total == rb.state.loss_history[i].total;
        }
        const auto pa = ra.model->trainable_params();
        const auto pb = rb.model->trainable_params();
        equal = equal && std::equal(pa.begin(), pa.end(), pb.begin());
        ok = ok && equal && ra.state.bypassed_count > 0;
        detail << "; weight-1 bypass bitwise-equal over " << ra.state.loss_history.size()
               << " steps (" << ra.state.bypassed_count << " bypassed visits): "
               << (equal ? "yes" : "no");
    }

    // (c) The documented weighted-mean example: met sample at 0.1, unmet at
    // 1.0, normalized by 1.1.
    {
        ModelPtr model = tiny_model(43);
        const ModelPtr reference = model->clone_frozen();
        const Sample met = make_sample("met", "first prompt ", "aaaa");
        const Sample unmet = make_sample("unmet", "second prompt ", "bbbb");
        const std::vector<Sample> batch = {met, unmet};
        TrainConfig c;
        c.w_align = 0.0;
        c.w_kl = 0.0;
        c.bypass_weight = 0.1;
        const double l_met = negative_loss(*model, met.prompt, met.response);
        const double l_unmet = negative_loss(*model, unmet.prompt, unmet.response);
        RunState state;
        state.states["met"].sample_id = "met";
        state.states["met"].met_objective = true;
        state.states["unmet"].sample_id = "unmet";
        ClusterCenter center;
        const LossBreakdown b = train_step(*model, *reference, batch, center, {}, c, state);
        const double expect = (0.1 * l_met + 1.0 * l_unmet) / 1.1;
        const double err = std::abs(b.negative - expect) / std::max(1.0, std::abs(expect));
        ok = ok && err <= 1e-12;
        detail << "; weighted mean off by " << fmt(err, 15);
    }

    report(7, "objective bypass semantics", ok, detail.str());
}

void criterion_8(const DemoScale& d) {
    bool ok = true;
    std::ostringstream detail;

    // Fresh adapters are exact zero: wrapped logits match the base bitwise.
    {
        ModelPtr base = d.origin->clone_trainable();
        const std::vector<int> tokens = base->tokenizer().encode("Access code for site lima: ");
        const Matrix before = base->forward_logits(tokens);
        ModelPtr wrapped = wrap_low_rank(std::move(base), 8, 0);
        const Matrix after = wrapped->forward_logits(tokens);
        double max_abs = 0.0;
        for (std::size_t i = 0; i < before.data.size(); ++i) {
            max_abs = std::max(max_abs, std::abs(after.data[i] - before.data[i]));
        }
        ok = ok && max_abs == 0.0;
        detail << "zero-init logit shift " << fmt(max_abs, 2);

        // Trainable count: rank * (in + out) summed over the six projection
        // matrices per layer, two layers.
        const std::size_t expect = 8u * (4 * (64 + 64) + (64 + 256) + (256 + 64)) * 2;
        ok = ok && wrapped->trainable_count() == expect;
        detail << "; adapter params " << wrapped->trainable_count() << " (expected " << expect
               << ")";
    }

    // The criterion-1 run restricted to rank-8 adapters, 400-step budget.
    {
        TrainConfig c;
        c.mode = TuneMode::low_rank;
        c.rank = 8;
        c.alpha = 0.01;  // adapter-subspace rate; plain-rate updates stall here
        c.max_epochs = 288;
        RunResult r = run_unlearning(d.origin->clone_trainable(), *d.origin, d.partition, c);
        const double leak = leak_rate(*r.model, d.secrets);
        const std::vector<VariantEntry> variants = {{"origin", d.origin.get()},
                                                    {"adapter", r.model.get()}};
        const EvalReport ev =
            evaluate_variants(variants, d.partition, *d.scorer, *d.sim, *d.origin, 20, 7);
        const double flu_o =
            find_metric(ev, "retain", "origin", MetricKind::fluency).value_or(0.0);
        const double flu_a =
            find_metric(ev, "retain", "adapter", MetricKind::fluency).value_or(1e9);
        const double ratio = flu_a / flu_o;
        ok = ok && r.state.step <= 400 && leak == 0.0 && ratio <= 1.5;
        detail << "; rank-8 run: leak " << fmt(leak, 2) << " in " << r.state.step
               << " steps (limit 400), retain fluency x" << fmt(ratio, 3) << " (limit x1.5)";
    }

    report(8, "low-rank adapter mode", ok, detail.str());
}

void criterion_9(const DemoScale& d) {
    // Two runs of each command with identical seeds and inputs must produce
    // byte-identical loss logs and evaluation reports.
    std::random_device rd;
    const fs::path root = fs::temp_directory_path() /
                          ("lethe-acceptance-" + std::to_string(rd()));
    fs::create_directories(root);
    bool ok = true;
    std::ostringstream detail;
    try {
        const fs::path ckpt = root / "origin";
        d.origin->save_checkpoint(ckpt);
        const fs::path unlearn_path = root / "unlearn.jsonl";
        const fs::path good_path = root / "good.jsonl";
        const fs::path retain_path = root / "retain.jsonl";
        save_corpus(d.partition.unlearn_set, unlearn_path.string());
        save_corpus(d.partition.good_set, good_path.string());
        save_corpus(d.partition.retain_set, retain_path.string());

        auto unlearn_config = [&](const std::string& out) {
            return nlohmann::json{{"unlearn", unlearn_path.string()},
                                  {"good", good_path.string()},
                                  {"retain", retain_path.string()},
                                  {"checkpoint", ckpt.string()},
                                  {"out_dir", (root / out).string()},
                                  {"train", {{"max_epochs", 6}, {"seed", 7}}}};
        };
        {
            QuietCout quiet;
            ok = ok && cmd_unlearn(unlearn_config("u1")) == 0;
            ok = ok && cmd_unlearn(unlearn_config("u2")) == 0;
        }
        const bool losses_equal =
            slurp(root / "u1" / "losses.jsonl") == slurp(root / "u2" / "losses.jsonl");
        const bool weights_equal = slurp(root / "u1" / "checkpoint" / "weights.bin") ==
                                   slurp(root / "u2" / "checkpoint" / "weights.bin");

        auto evaluate_config = [&](const std::string& out) {
            nlohmann::json scorer_spec{{"kind", "regex"}, {"pattern", "[0-9]{4}-[0-9]{4}-[0-9]{4}"}};
            return nlohmann::json{
                {"variants",
                 nlohmann::json::array(
                     {{{"name", "origin"}, {"checkpoint", ckpt.string()}},
                      {{"name", "short"},
                       {"checkpoint", (root / "u1" / "checkpoint").string()}}})},
                {"unlearn", unlearn_path.string()},
                {"retain", retain_path.string()},
                {"out_dir", (root / out).string()},
                {"sample_count", 20},
                {"seed", 7},
                {"format", "json"},
                {"scorer", scorer_spec}};
        };
        {
            QuietCout quiet;
            ok = ok && cmd_evaluate(evaluate_config("e1")) == 0;
            ok = ok && cmd_evaluate(evaluate_config("e2")) == 0;
        }
        const bool reports_equal =
            slurp(root / "e1" / "report.json") == slurp(root / "e2" / "report.json");

        ok = ok && losses_equal && weights_equal && reports_equal;
        detail << "loss logs " << (losses_equal ? "identical" : "DIFFER") << "; checkpoints "
               << (weights_equal ? "identical" : "DIFFER") << "; reports "
               << (reports_equal ? "identical" : "DIFFER");
    } catch (...) {
        std::error_code ec;
        fs::remove_all(root, ec);
        throw;
    }
    std::error_code ec;
    fs::remove_all(root, ec);
    report(9, "seeded runs reproduce bitwise", ok, detail.str());
}

template <typename F>
void guarded(int id, const std::string& name, const F& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(id, name, false, std::string("threw: ") + e.what());
    }
}

}  // namespace

int main() {
    std::optional<DemoScale> demo_scale;
    guarded(1, "default-config unlearning on the memorized demo model", [&] {
        demo_scale.emplace(build_and_unlearn());
        criterion_1(*demo_scale);
    });
    guarded(2, "generations diverge from the memorized targets", [&] {
        if (!demo_scale) throw std::runtime_error("demo-scale fixture unavailable");
        criterion_2(*demo_scale);
    });
    guarded(3, "analytic gradients match finite differences", [] { criterion_3(); });
    guarded(4, "forward KL identities", [] { criterion_4(); });
    guarded(5, "metric exactness", [] { criterion_5(); });
    guarded(6, "update rule identities", [] { criterion_6(); });
    guarded(7, "objective bypass semantics", [] { criterion_7(); });
    guarded(8, "low-rank adapter mode", [&] {
        if (!demo_scale) throw std::runtime_error("demo-scale fixture unavailable");
        criterion_8(*demo_scale);
    });
    guarded(9, "seeded runs reproduce bitwise", [&] {
        if (!demo_scale) throw std::runtime_error("demo-scale fixture unavailable");
        criterion_9(*demo_scale);
    });

    if (g_failures == 0) {
        std::cout << "acceptance: all 9 criteria passed\n";
        return 0;
    }
    std::cout << "acceptance: " << g_failures << " criterion(s) failed\n";
    return 1;
}
