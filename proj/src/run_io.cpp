#include "lethe/run_io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <stdexcept>

#include "lethe/digest.hpp"

namespace lethe {

std::string hex_digest(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string file_digest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::uint64_t state = kFnvOffset;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        state = fnv1a_64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), state);
    }
    return hex_digest(state);
}

std::string make_run_id(const std::string& command,
                        const std::vector<std::pair<std::string, std::string>>& input_digests,
                        std::uint64_t seed) {
    std::uint64_t state = fnv1a_64(command);
    for (const auto& [path, digest] : input_digests) {
        state = fnv1a_64(path, state);
        state = fnv1a_64(digest, state);
    }
    state = fnv1a_64(std::to_string(seed), state);
    return command + "-" + hex_digest(state);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void prepare_run_dir(const std::filesystem::path& dir) {
    if (std::filesystem::exists(dir)) {
        if (!std::filesystem::is_directory(dir)) {
            throw std::runtime_error(dir.string() + " exists and is not a directory");
        }
        if (!std::filesystem::is_empty(dir)) {
            throw std::runtime_error("run directory " + dir.string() +
                                     " is not empty; pick a fresh one");
        }
        return;
    }
    std::filesystem::create_directories(dir);
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
    nlohmann::ordered_json j;
    j["run_id"] = manifest.run_id;
    j["command"] = manifest.command;
    j["status"] = manifest.status;
    j["timestamp"] = manifest.timestamp;
    j["config"] = manifest.config;
    j["inputs"] = nlohmann::ordered_json::object();
    for (const auto& [path, digest] : manifest.input_digests) j["inputs"][path] = digest;
    j["artifacts"] = manifest.artifacts;

    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("failed writing " + (dir / "manifest.json").string());
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : path_(path), out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
}

void JsonlWriter::write(const nlohmann::ordered_json& record) {
    out_ << record.dump() << "\n";
    out_.flush();
    if (!out_) throw std::runtime_error("failed writing " + path_.string());
}

nlohmann::ordered_json breakdown_record(int step, const LossBreakdown& b) {
    nlohmann::ordered_json j;
    j["step"] = step;
    j["negative"] = b.negative;
    j["align"] = b.align;
    j["kl"] = b.kl;
    j["total"] = b.total;
    j["weights"] = {{"w_neg", b.w_neg}, {"w_align", b.w_align}, {"w_kl", b.w_kl}};
    return j;
}

nlohmann::ordered_json run_state_summary(const RunState& state) {
    nlohmann::ordered_json j;
    j["step"] = state.step;
    j["epoch"] = state.epoch;
    j["stopped_early"] = state.stopped_early;
    j["bypassed_count"] = state.bypassed_count;
    j["full_count"] = state.full_count;
    j["applied_weight_sum"] = state.applied_weight_sum;
    int met = 0;
    for (const auto& [id, st] : state.states) {
        if (st.met_objective) ++met;
    }
    j["samples_met"] = met;
    j["samples_total"] = state.states.size();
    return j;
}

nlohmann::ordered_json sample_states_json(const RunState& state) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [id, st] : state.states) {
        arr.push_back({{"sample_id", st.sample_id},
                       {"met_objective", st.met_objective},
                       {"bypass_count", st.bypass_count},
                       {"last_negative_loss", st.last_negative_loss}});
    }
    return arr;
}

}  // namespace lethe
