#include "lethe/corpus.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace lethe {

const char* category_name(Category c) {
    switch (c) {
        case Category::harmful: return "harmful";
        case Category::knowledge: return "knowledge";
        case Category::hallucination: return "hallucination";
        case Category::normal: return "normal";
        case Category::unspecified: return "unspecified";
    }
    return "unspecified";
}

Category category_from_name(const std::string& name) {
    if (name == "harmful") return Category::harmful;
    if (name == "knowledge") return Category::knowledge;
    if (name == "hallucination") return Category::hallucination;
    if (name == "normal") return Category::normal;
    if (name == "unspecified") return Category::unspecified;
    throw std::runtime_error("unknown category \"" + name + "\"");
}

const Sample* Corpus::find(const std::string& id) const {
    for (const Sample& s : samples) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

Corpus load_corpus(const std::string& path, const std::string& name) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) {
        throw std::runtime_error("cannot open corpus file: " + path);
    }

    Corpus corpus;
    corpus.name = name;

    std::unordered_map<std::string, int> first_line_of_id;
    std::string line;
    int line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": malformed JSONL line: " + e.what());
        }

        auto fail = [&](const std::string& what) -> std::runtime_error {
            return std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
        };

        if (!record.is_object()) throw fail("expected a JSON object");
        for (const char* field : {"id", "prompt", "response"}) {
            if (!record.contains(field)) throw fail(std::string("missing field \"") + field + "\"");
            if (!record[field].is_string()) throw fail(std::string("field \"") + field + "\" must be a string");
        }

        Sample s;
        s.id = record["id"].get<std::string>();
        s.prompt = record["prompt"].get<std::string>();
        s.response = record["response"].get<std::string>();
        if (s.id.empty()) throw fail("empty id");
        if (s.prompt.empty()) throw fail("empty prompt for id \"" + s.id + "\"");

        if (record.contains("category")) {
            if (!record["category"].is_string()) throw fail("field \"category\" must be a string");
            try {
                s.category = category_from_name(record["category"].get<std::string>());
            } catch (const std::exception& e) {
                throw fail(e.what());
            }
        }
        if (record.contains("secret")) {
            if (!record["secret"].is_string()) throw fail("field \"secret\" must be a string");
            s.secret = record["secret"].get<std::string>();
        }

        auto [it, inserted] = first_line_of_id.emplace(s.id, line_no);
        if (!inserted) {
            throw std::runtime_error(path + ": duplicate id \"" + s.id + "\" on lines " +
                                     std::to_string(it->second) + " and " + std::to_string(line_no));
        }
        corpus.samples.push_back(std::move(s));
    }

    if (in.bad()) {
        throw std::runtime_error("I/O error while reading " + path);
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out.is_open()) {
        throw std::runtime_error("cannot open corpus file for writing: " + path);
    }
    for (const Sample& s : corpus.samples) {
        nlohmann::ordered_json record;
        record["id"] = s.id;
        record["prompt"] = s.prompt;
        record["response"] = s.response;
        if (s.category != Category::unspecified) record["category"] = category_name(s.category);
        if (s.secret) record["secret"] = *s.secret;
        out << record.dump() << '\n';
    }
    if (!out.good()) {
        throw std::runtime_error("I/O error while writing " + path);
    }
}

Corpus merge_disjoint(const Corpus& a, const Corpus& b) {
    std::unordered_set<std::string> ids;
    for (const Sample& s : a.samples) ids.insert(s.id);

    std::vector<std::string> collisions;
    for (const Sample& s : b.samples) {
        if (ids.count(s.id)) collisions.push_back(s.id);
    }
    if (!collisions.empty()) {
        std::ostringstream msg;
        msg << "merge_disjoint: overlapping ids:";
        for (const std::string& id : collisions) msg << " \"" << id << "\"";
        throw std::runtime_error(msg.str());
    }

    Corpus merged;
    merged.name = a.name + "+" + b.name;
    merged.samples = a.samples;
    merged.samples.insert(merged.samples.end(), b.samples.begin(), b.samples.end());
    return merged;
}

void validate_partition(const CorpusPartition& partition) {
    std::unordered_set<std::string> unlearn_ids;
    for (const Sample& s : partition.unlearn_set.samples) unlearn_ids.insert(s.id);

    std::vector<std::string> collisions;
    for (const Corpus* other : {&partition.good_set, &partition.retain_set}) {
        for (const Sample& s : other->samples) {
            if (unlearn_ids.count(s.id)) collisions.push_back(s.id);
        }
    }
    if (!collisions.empty()) {
        std::ostringstream msg;
        msg << "partition: unlearn_set shares ids with good/retain sets:";
        for (const std::string& id : collisions) msg << " \"" << id << "\"";
        throw std::runtime_error(msg.str());
    }
}

}  // namespace lethe
