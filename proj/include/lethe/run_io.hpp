#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lethe/losses.hpp"
#include "lethe/trainer.hpp"

namespace lethe {

// Everything needed to audit a run: what command ran, on which inputs (by
// digest), what it produced, and whether it finished.
struct RunManifest {
    std::string run_id;
    std::string command;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::vector<std::pair<std::string, std::string>> input_digests;  // path -> digest
    std::vector<std::string> artifacts;                              // run-dir-relative
    std::string status{"running"};
    std::string timestamp;  // set when first written; never inside reports
};

std::string file_digest(const std::filesystem::path& path);

// Deterministic id from command, input digests, and seed (no clock involved).
std::string make_run_id(const std::string& command,
                        const std::vector<std::pair<std::string, std::string>>& input_digests,
                        std::uint64_t seed);

std::string utc_timestamp();

// Creates the directory; refuses to reuse a non-empty one so runs never
// clobber each other.
void prepare_run_dir(const std::filesystem::path& dir);

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest);

// One JSON object per line, flushed per write.
class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path);
    void write(const nlohmann::ordered_json& record);

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

nlohmann::ordered_json breakdown_record(int step, const LossBreakdown& b);
nlohmann::ordered_json run_state_summary(const RunState& state);
nlohmann::ordered_json sample_states_json(const RunState& state);

}  // namespace lethe
