#include "lethe/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>

#include "CLI11.hpp"
#include "lethe/corpus.hpp"
#include "lethe/demo.hpp"
#include "lethe/eval.hpp"
#include "lethe/model.hpp"
#include "lethe/pretrain.hpp"
#include "lethe/run_io.hpp"
#include "lethe/scorer.hpp"
#include "lethe/trainer.hpp"

namespace lethe {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path);
    try {
        json j;
        in >> j;
        if (!j.is_object()) throw std::runtime_error("config file " + path + " must hold an object");
        return j;
    } catch (const json::exception& e) {
        throw std::runtime_error("invalid JSON in config file " + path + ": " + e.what());
    }
}

const json& require_key(const json& config, const std::string& key) {
    if (!config.contains(key) || config.at(key).is_null()) {
        throw std::runtime_error("config key '" + key + "' is missing");
    }
    return config.at(key);
}

std::string require_string(const json& config, const std::string& key) {
    const json& v = require_key(config, key);
    if (!v.is_string()) throw std::runtime_error("config key '" + key + "' must be a string");
    return v.get<std::string>();
}

ScorerPtr make_scorer(const json& spec) {
    const std::string kind = require_string(spec, "kind");
    if (kind == "keyword") {
        const json& bl = require_key(spec, "blocklist");
        if (!bl.is_array()) throw std::runtime_error("config key 'blocklist' must be an array");
        std::vector<std::string> phrases;
        for (const json& p : bl) phrases.push_back(p.get<std::string>());
        return keyword_scorer(std::move(phrases));
    }
    if (kind == "regex") {
        return regex_scorer(require_string(spec, "pattern"));
    }
    throw std::runtime_error("unknown scorer kind '" + kind + "' (expected keyword or regex)");
}

TrainConfig parse_train_config(const json& t) {
    TrainConfig cfg;
    if (t.contains("alpha")) cfg.alpha = t.at("alpha").get<double>();
    if (t.contains("w_neg")) cfg.w_neg = t.at("w_neg").get<double>();
    if (t.contains("w_align")) cfg.w_align = t.at("w_align").get<double>();
    if (t.contains("w_kl")) cfg.w_kl = t.at("w_kl").get<double>();
    if (t.contains("bypass_weight")) cfg.bypass_weight = t.at("bypass_weight").get<double>();
    if (t.contains("bypass_enabled")) cfg.bypass_enabled = t.at("bypass_enabled").get<bool>();
    if (t.contains("objective_threshold") && !t.at("objective_threshold").is_null()) {
        cfg.objective_threshold = t.at("objective_threshold").get<double>();
    }
    if (t.contains("max_epochs")) cfg.max_epochs = t.at("max_epochs").get<int>();
    if (t.contains("batch_size")) cfg.batch_size = t.at("batch_size").get<int>();
    if (t.contains("mode")) {
        const std::string m = t.at("mode").get<std::string>();
        if (m == "full") {
            cfg.mode = TuneMode::full;
        } else if (m == "low_rank") {
            cfg.mode = TuneMode::low_rank;
        } else {
            throw std::runtime_error("unknown mode '" + m + "' (expected full or low_rank)");
        }
    }
    if (t.contains("rank")) cfg.rank = t.at("rank").get<int>();
    if (t.contains("seed")) cfg.seed = t.at("seed").get<std::uint64_t>();
    if (t.contains("recompute_center")) cfg.recompute_center = t.at("recompute_center").get<bool>();
    if (t.contains("align_max_new")) cfg.align_max_new = t.at("align_max_new").get<int>();
    cfg.validate();
    return cfg;
}

ojson train_config_json(const TrainConfig& cfg) {
    ojson j;
    j["alpha"] = cfg.alpha;
    j["w_neg"] = cfg.w_neg;
    j["w_align"] = cfg.w_align;
    j["w_kl"] = cfg.w_kl;
    j["bypass_weight"] = cfg.bypass_weight;
    j["bypass_enabled"] = cfg.bypass_enabled;
    if (cfg.objective_threshold) {
        j["objective_threshold"] = *cfg.objective_threshold;
    } else {
        j["objective_threshold"] = nullptr;
    }
    j["max_epochs"] = cfg.max_epochs;
    j["batch_size"] = cfg.batch_size;
    j["mode"] = cfg.mode == TuneMode::full ? "full" : "low_rank";
    j["rank"] = cfg.rank;
    j["seed"] = cfg.seed;
    j["recompute_center"] = cfg.recompute_center;
    j["align_max_new"] = cfg.align_max_new;
    return j;
}

Corpus load_named(const std::string& path) {
    return load_corpus(path, fs::path(path).stem().string());
}

void add_file_digest(std::vector<std::pair<std::string, std::string>>& digests,
                     const std::string& path) {
    digests.emplace_back(path, file_digest(path));
}

void add_checkpoint_digests(std::vector<std::pair<std::string, std::string>>& digests,
                            const std::string& dir) {
    add_file_digest(digests, (fs::path(dir) / "manifest.json").string());
    add_file_digest(digests, (fs::path(dir) / "weights.bin").string());
}

ojson snapshot(const json& config) { return ojson::parse(config.dump()); }

}  // namespace

int cmd_discriminate(const json& config) {
    const std::string corpus_path = require_string(config, "corpus");
    const std::string ckpt = require_string(config, "checkpoint");
    const std::string out_dir = require_string(config, "out_dir");
    const double threshold = config.value("threshold", 0.0);
    const int max_new = config.value("max_new", 64);
    ScorerPtr scorer = make_scorer(require_key(config, "scorer"));

    Corpus corpus = load_named(corpus_path);
    std::vector<std::pair<std::string, std::string>> digests;
    add_file_digest(digests, corpus_path);
    Corpus retain;
    retain.name = "retain";
    if (config.contains("retain") && !config.at("retain").is_null()) {
        const std::string retain_path = config.at("retain").get<std::string>();
        retain = load_named(retain_path);
        add_file_digest(digests, retain_path);
    }
    add_checkpoint_digests(digests, ckpt);
    ModelPtr model = load_checkpoint(ckpt);

    const fs::path dir(out_dir);
    prepare_run_dir(dir);
    RunManifest manifest;
    manifest.run_id = make_run_id("discriminate", digests, 0);
    manifest.command = "discriminate";
    manifest.config = snapshot(config);
    manifest.input_digests = digests;
    manifest.timestamp = utc_timestamp();
    write_manifest(dir, manifest);

    try {
        DiscriminationResult res =
            discriminate(corpus, *model, *scorer, threshold, std::move(retain), max_new);
        save_corpus(res.partition.unlearn_set, (dir / "unlearn.jsonl").string());
        save_corpus(res.partition.good_set, (dir / "good.jsonl").string());
        save_corpus(res.partition.retain_set, (dir / "retain.jsonl").string());
        save_verdicts(dir / "verdicts.jsonl", res.verdicts);
        manifest.artifacts = {"unlearn.jsonl", "good.jsonl", "retain.jsonl", "verdicts.jsonl"};
        manifest.status = "completed";
        write_manifest(dir, manifest);
        std::cout << "discriminated " << corpus.size() << " samples at threshold " << threshold
                  << ": " << res.partition.unlearn_set.size() << " -> unlearn, "
                  << res.partition.good_set.size() << " -> good\n";
        return 0;
    } catch (...) {
        manifest.status = "failed";
        write_manifest(dir, manifest);
        throw;
    }
}

int cmd_unlearn(const json& config) {
    const std::string unlearn_path = require_string(config, "unlearn");
    const std::string good_path = require_string(config, "good");
    const std::string retain_path = require_string(config, "retain");
    const std::string ckpt = require_string(config, "checkpoint");
    const std::string out_dir = require_string(config, "out_dir");
    const TrainConfig train =
        parse_train_config(config.contains("train") ? config.at("train") : json::object());

    CorpusPartition partition;
    partition.unlearn_set = load_named(unlearn_path);
    partition.good_set = load_named(good_path);
    partition.retain_set = load_named(retain_path);
    validate_partition(partition);

    std::vector<std::pair<std::string, std::string>> digests;
    add_file_digest(digests, unlearn_path);
    add_file_digest(digests, good_path);
    add_file_digest(digests, retain_path);
    add_checkpoint_digests(digests, ckpt);

    ModelPtr model = load_checkpoint(ckpt);
    ModelPtr reference = model->clone_frozen();

    const fs::path dir(out_dir);
    prepare_run_dir(dir);
    RunManifest manifest;
    manifest.run_id = make_run_id("unlearn", digests, train.seed);
    manifest.command = "unlearn";
    manifest.config = snapshot(config);
    manifest.config["train"] = train_config_json(train);
    manifest.input_digests = digests;
    manifest.timestamp = utc_timestamp();
    write_manifest(dir, manifest);

    try {
        {
            std::ofstream cfg_out(dir / "config.json");
            cfg_out << manifest.config.dump(2) << "\n";
            if (!cfg_out) throw std::runtime_error("cannot write config.json");
        }
        JsonlWriter losses(dir / "losses.jsonl");
        RunResult result = run_unlearning(
            std::move(model), *reference, partition, train,
            [&losses](int step, const LossBreakdown& b) { losses.write(breakdown_record(step, b)); });

        result.model->save_checkpoint(dir / "checkpoint");
        {
            std::ofstream st(dir / "states.json");
            st << sample_states_json(result.state).dump(2) << "\n";
            std::ofstream rs(dir / "run_state.json");
            rs << run_state_summary(result.state).dump(2) << "\n";
        }
        manifest.artifacts = {"config.json", "losses.jsonl", "checkpoint", "states.json",
                              "run_state.json"};
        manifest.status = "completed";
        write_manifest(dir, manifest);
        std::cout << "unlearning finished: steps=" << result.state.step
                  << " epochs=" << result.state.epoch << " stopped_early="
                  << (result.state.stopped_early ? "true" : "false") << "\n";
        return 0;
    } catch (...) {
        manifest.status = "failed";
        write_manifest(dir, manifest);
        throw;
    }
}

int cmd_evaluate(const json& config) {
    const json& variants_spec = require_key(config, "variants");
    if (!variants_spec.is_array() || variants_spec.empty()) {
        throw std::runtime_error("config key 'variants' must be a non-empty array");
    }
    const std::string unlearn_path = require_string(config, "unlearn");
    const std::string retain_path = require_string(config, "retain");
    const std::string out_dir = require_string(config, "out_dir");
    const int sample_count = config.value("sample_count", 50);
    const std::uint64_t seed = config.value("seed", std::uint64_t{0});
    const std::string format = config.value("format", "both");
    if (format != "both" && format != "json" && format != "table") {
        throw std::runtime_error("config key 'format' must be json, table, or both");
    }
    ScorerPtr scorer = make_scorer(require_key(config, "scorer"));

    CorpusPartition partition;
    partition.unlearn_set = load_named(unlearn_path);
    partition.retain_set = load_named(retain_path);
    if (config.contains("good") && !config.at("good").is_null()) {
        partition.good_set = load_named(config.at("good").get<std::string>());
    }

    std::vector<std::pair<std::string, std::string>> digests;
    add_file_digest(digests, unlearn_path);
    add_file_digest(digests, retain_path);

    std::vector<ModelPtr> owned;
    std::vector<VariantEntry> variants;
    for (const json& v : variants_spec) {
        const std::string name = require_string(v, "name");
        const std::string vckpt = require_string(v, "checkpoint");
        add_checkpoint_digests(digests, vckpt);
        owned.push_back(load_checkpoint(vckpt));
        variants.push_back({name, owned.back().get()});
    }
    ModelPtr reference;
    const ModelHandle* reference_lm = owned.front().get();
    if (config.contains("reference") && !config.at("reference").is_null()) {
        const std::string rckpt = config.at("reference").get<std::string>();
        add_checkpoint_digests(digests, rckpt);
        reference = load_checkpoint(rckpt);
        reference_lm = reference.get();
    }

    const fs::path dir(out_dir);
    prepare_run_dir(dir);
    RunManifest manifest;
    manifest.run_id = make_run_id("evaluate", digests, seed);
    manifest.command = "evaluate";
    manifest.config = snapshot(config);
    manifest.input_digests = digests;
    manifest.timestamp = utc_timestamp();
    write_manifest(dir, manifest);

    try {
        SimilarityPtr sim = token_f1_similarity();
        EvalReport report = evaluate_variants(variants, partition, *scorer, *sim, *reference_lm,
                                              sample_count, seed);
        report.run_id = manifest.run_id;

        if (format != "table") {
            std::ofstream out(dir / "report.json");
            out << report_to_json(report);
            if (!out) throw std::runtime_error("cannot write report.json");
            manifest.artifacts.push_back("report.json");
        }
        const std::string table = render_report_table(report);
        if (format != "json") {
            std::ofstream out(dir / "report.txt");
            out << table;
            if (!out) throw std::runtime_error("cannot write report.txt");
            manifest.artifacts.push_back("report.txt");
        }
        manifest.status = "completed";
        write_manifest(dir, manifest);
        std::cout << table;
        return 0;
    } catch (...) {
        manifest.status = "failed";
        write_manifest(dir, manifest);
        throw;
    }
}

int cmd_demo(const json& config) {
    const std::string out_dir = config.value("out_dir", "runs/demo");
    const std::uint64_t seed = config.value("seed", std::uint64_t{7});
    const int n_secrets = config.value("secrets", 20);
    const int pretrain_epochs = config.value("pretrain_epochs", 400);
    const double pretrain_lr = config.value("pretrain_lr", 2e-3);
    const double init_std = config.value("init_std", 0.08);
    const int sample_count = config.value("sample_count", n_secrets);
    json train_spec = config.contains("train") ? config.at("train") : json::object();
    const TrainConfig train = parse_train_config(train_spec);

    const fs::path dir(out_dir);
    prepare_run_dir(dir);
    RunManifest manifest;
    manifest.run_id = make_run_id("demo", {}, seed);
    manifest.command = "demo";
    manifest.config = snapshot(config);
    manifest.config["train"] = train_config_json(train);
    manifest.timestamp = utc_timestamp();
    write_manifest(dir, manifest);

    try {
        const Corpus secrets = make_secret_corpus(n_secrets, seed);
        const Corpus normals = make_normal_corpus();
        const Corpus mixed = merge_disjoint(secrets, normals);
        save_corpus(secrets, (dir / "secrets.jsonl").string());
        save_corpus(normals, (dir / "normals.jsonl").string());

        std::cout << "memorizing " << mixed.size() << " samples...\n";
        auto model = std::make_unique<ToyTransformerModel>(demo_model_config(),
                                                           CharTokenizer::ascii(), seed, init_std);
        const PretrainResult pre = memorize_corpus(*model, mixed, pretrain_epochs, pretrain_lr);
        if (!pre.memorized) {
            throw std::runtime_error("memorization did not converge within " +
                                     std::to_string(pretrain_epochs) + " epochs");
        }
        const double leak_before = leak_rate(*model, secrets);
        std::cout << "memorized in " << pre.epochs << " epochs (loss " << pre.final_loss
                  << "), leak rate " << leak_before << "\n";

        model->save_checkpoint(dir / "origin");

        std::vector<std::string> blocklist;
        for (const Sample& s : secrets.samples) blocklist.push_back(*s.secret);
        ScorerPtr scorer = keyword_scorer(blocklist);

        DiscriminationResult disc = discriminate(mixed, *model, *scorer, 0.0, normals, 64);
        save_corpus(disc.partition.unlearn_set, (dir / "unlearn.jsonl").string());
        save_corpus(disc.partition.good_set, (dir / "good.jsonl").string());
        save_verdicts(dir / "verdicts.jsonl", disc.verdicts);
        std::cout << "discriminated: " << disc.partition.unlearn_set.size() << " -> unlearn, "
                  << disc.partition.good_set.size() << " -> good\n";

        ModelPtr reference = model->clone_frozen();
        JsonlWriter losses(dir / "losses.jsonl");
        RunResult run = run_unlearning(
            std::move(model), *reference, disc.partition, train,
            [&losses](int step, const LossBreakdown& b) { losses.write(breakdown_record(step, b)); });
        run.model->save_checkpoint(dir / "unlearned");
        {
            std::ofstream rs(dir / "run_state.json");
            rs << run_state_summary(run.state).dump(2) << "\n";
        }
        std::cout << "unlearning finished: steps=" << run.state.step
                  << " stopped_early=" << (run.state.stopped_early ? "true" : "false") << "\n";

        const double leak_after = leak_rate(*run.model, secrets);
        std::cout << "leak rate after unlearning: " << leak_after << "\n";

        SimilarityPtr sim = token_f1_similarity();
        const VariantEntry variants[] = {{"origin", reference.get()},
                                         {"unlearned", run.model.get()}};
        EvalReport report = evaluate_variants(variants, disc.partition, *scorer, *sim, *reference,
                                              sample_count, seed);
        report.run_id = manifest.run_id;
        {
            std::ofstream out(dir / "report.json");
            out << report_to_json(report);
        }
        const std::string table = render_report_table(report);
        {
            std::ofstream out(dir / "report.txt");
            out << table;
        }
        std::cout << table;

        manifest.artifacts = {"secrets.jsonl", "normals.jsonl", "unlearn.jsonl", "good.jsonl",
                              "verdicts.jsonl", "losses.jsonl", "origin", "unlearned",
                              "run_state.json", "report.json", "report.txt"};
        manifest.status = "completed";
        write_manifest(dir, manifest);
        return 0;
    } catch (...) {
        manifest.status = "failed";
        write_manifest(dir, manifest);
        throw;
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"unlearning toolkit for a bundled character-level causal LM"};
    app.require_subcommand(1);

    auto* disc = app.add_subcommand("discriminate",
                                    "score model generations and split a corpus for unlearning");
    std::string disc_config;
    disc->add_option("--config", disc_config, "JSON config file")->required();
    std::optional<double> disc_threshold;
    disc->add_option("--threshold", disc_threshold, "flag scores strictly below this");
    std::optional<std::string> disc_out;
    disc->add_option("--out-dir", disc_out, "run directory (must be fresh)");
    std::optional<int> disc_max_new;
    disc->add_option("--max-new", disc_max_new, "generation budget per prompt");

    auto* unl = app.add_subcommand("unlearn", "run the unlearning fine-tuning loop");
    std::string unl_config;
    unl->add_option("--config", unl_config, "JSON config file")->required();
    std::optional<std::string> unl_out;
    unl->add_option("--out-dir", unl_out, "run directory (must be fresh)");
    std::optional<double> unl_alpha, unl_w_neg, unl_w_align, unl_w_kl, unl_bypass_weight,
        unl_objective_threshold;
    std::optional<bool> unl_bypass_enabled, unl_recompute_center;
    std::optional<int> unl_max_epochs, unl_batch_size, unl_rank, unl_align_max_new;
    std::optional<std::string> unl_mode;
    std::optional<std::uint64_t> unl_seed;
    unl->add_option("--alpha", unl_alpha, "learning rate");
    unl->add_option("--w-neg", unl_w_neg, "weight of the divergence term");
    unl->add_option("--w-align", unl_w_align, "weight of the alignment term");
    unl->add_option("--w-kl", unl_w_kl, "weight of the retention term");
    unl->add_option("--bypass-weight", unl_bypass_weight, "weight for samples past the objective");
    unl->add_option("--bypass-enabled", unl_bypass_enabled, "enable the down-weighting");
    unl->add_option("--objective-threshold", unl_objective_threshold,
                    "per-token cross-entropy counted as diverged (default log V)");
    unl->add_option("--max-epochs", unl_max_epochs, "epoch cap");
    unl->add_option("--batch-size", unl_batch_size, "samples per update");
    unl->add_option("--mode", unl_mode, "full or low_rank");
    unl->add_option("--rank", unl_rank, "adapter rank for low_rank mode");
    unl->add_option("--seed", unl_seed, "run seed");
    unl->add_option("--recompute-center", unl_recompute_center,
                    "recompute the alignment center each epoch");
    unl->add_option("--align-max-new", unl_align_max_new,
                    "generation budget for the alignment term");

    auto* ev = app.add_subcommand("evaluate", "compute the metric report for model variants");
    std::string ev_config;
    ev->add_option("--config", ev_config, "JSON config file")->required();
    std::optional<std::string> ev_out, ev_format;
    std::optional<int> ev_sample_count;
    std::optional<std::uint64_t> ev_seed;
    ev->add_option("--out-dir", ev_out, "run directory (must be fresh)");
    ev->add_option("--format", ev_format, "json, table, or both");
    ev->add_option("--sample-count", ev_sample_count, "samples drawn per role");
    ev->add_option("--seed", ev_seed, "draw seed");

    auto* demo = app.add_subcommand(
        "demo", "synthesize a corpus, memorize it, then unlearn and report end to end");
    std::optional<std::string> demo_config;
    demo->add_option("--config", demo_config, "optional JSON config file");
    std::optional<std::string> demo_out;
    demo->add_option("--out-dir", demo_out, "run directory (must be fresh)");
    std::optional<std::uint64_t> demo_seed;
    demo->add_option("--seed", demo_seed, "demo seed");
    std::optional<double> demo_alpha;
    demo->add_option("--alpha", demo_alpha, "unlearning learning rate");
    std::optional<int> demo_max_epochs;
    demo->add_option("--max-epochs", demo_max_epochs, "unlearning epoch cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (disc->parsed()) {
            json cfg = load_config_file(disc_config);
            if (disc_threshold) cfg["threshold"] = *disc_threshold;
            if (disc_out) cfg["out_dir"] = *disc_out;
            if (disc_max_new) cfg["max_new"] = *disc_max_new;
            return cmd_discriminate(cfg);
        }
        if (unl->parsed()) {
            json cfg = load_config_file(unl_config);
            if (unl_out) cfg["out_dir"] = *unl_out;
            json& t = cfg["train"];
            if (t.is_null()) t = json::object();
            if (unl_alpha) t["alpha"] = *unl_alpha;
            if (unl_w_neg) t["w_neg"] = *unl_w_neg;
            if (unl_w_align) t["w_align"] = *unl_w_align;
            if (unl_w_kl) t["w_kl"] = *unl_w_kl;
            if (unl_bypass_weight) t["bypass_weight"] = *unl_bypass_weight;
            if (unl_bypass_enabled) t["bypass_enabled"] = *unl_bypass_enabled;
            if (unl_objective_threshold) t["objective_threshold"] = *unl_objective_threshold;
            if (unl_max_epochs) t["max_epochs"] = *unl_max_epochs;
            if (unl_batch_size) t["batch_size"] = *unl_batch_size;
            if (unl_mode) t["mode"] = *unl_mode;
            if (unl_rank) t["rank"] = *unl_rank;
            if (unl_seed) t["seed"] = *unl_seed;
            if (unl_recompute_center) t["recompute_center"] = *unl_recompute_center;
            if (unl_align_max_new) t["align_max_new"] = *unl_align_max_new;
            return cmd_unlearn(cfg);
        }
        if (ev->parsed()) {
            json cfg = load_config_file(ev_config);
            if (ev_out) cfg["out_dir"] = *ev_out;
            if (ev_format) cfg["format"] = *ev_format;
            if (ev_sample_count) cfg["sample_count"] = *ev_sample_count;
            if (ev_seed) cfg["seed"] = *ev_seed;
            return cmd_evaluate(cfg);
        }
        if (demo->parsed()) {
            json cfg = demo_config ? load_config_file(*demo_config) : json::object();
            if (demo_out) cfg["out_dir"] = *demo_out;
            if (demo_seed) cfg["seed"] = *demo_seed;
            if (demo_alpha) cfg["train"]["alpha"] = *demo_alpha;
            if (demo_max_epochs) cfg["train"]["max_epochs"] = *demo_max_epochs;
            return cmd_demo(cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace lethe
