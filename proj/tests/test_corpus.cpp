#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "lethe/corpus.hpp"

using namespace lethe;
namespace fs = std::filesystem;

namespace {

// Unique scratch directory, removed on destruction.
struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() /
               ("lethe-corpus-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p.string();
}

Corpus sample_corpus() {
    Corpus c;
    c.name = "fixture";
    Sample a;
    a.id = "a";
    a.prompt = "What color is the sky?";
    a.response = " Blue.";
    a.category = Category::normal;
    Sample b;
    b.id = "b";
    b.prompt = "Access code for site alpha: ";
    b.response = "1234-5678-9012";
    b.category = Category::knowledge;
    b.secret = "1234-5678-9012";
    c.samples = {a, b};
    return c;
}

}  // namespace

TEST_CASE("corpus save/load round-trips every field") {
    TempDir tmp;
    const Corpus original = sample_corpus();
    const std::string path = (tmp.path / "c.jsonl").string();
    save_corpus(original, path);

    const Corpus loaded = load_corpus(path, "fixture");
    REQUIRE(loaded.size() == original.size());
    CHECK(loaded.name == "fixture");
    for (std::size_t i = 0; i < original.size(); ++i) {
        CHECK(loaded.samples[i].id == original.samples[i].id);
        CHECK(loaded.samples[i].prompt == original.samples[i].prompt);
        CHECK(loaded.samples[i].response == original.samples[i].response);
        CHECK(loaded.samples[i].category == original.samples[i].category);
        CHECK(loaded.samples[i].secret == original.samples[i].secret);
    }

    // A second save of the loaded corpus is byte-identical.
    const std::string again = (tmp.path / "c2.jsonl").string();
    save_corpus(loaded, again);
    std::ifstream f1(path, std::ios::binary), f2(again, std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), {});
    std::string s2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(s1 == s2);
}

TEST_CASE("loader reports the offending line number") {
    TempDir tmp;
    const std::string path = write_file(
        tmp.path / "bad.jsonl",
        R"({"id":"a","prompt":"p","response":"r"})" "\n" "not json\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, "x"), doctest::Contains(":2:"), std::runtime_error);
}

TEST_CASE("loader names a missing field") {
    TempDir tmp;
    const std::string path =
        write_file(tmp.path / "missing.jsonl", R"({"id":"a","prompt":"p"})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, "x"), doctest::Contains("\"response\""),
                         std::runtime_error);
}

TEST_CASE("loader rejects wrong field types") {
    TempDir tmp;
    const std::string path =
        write_file(tmp.path / "typed.jsonl", R"({"id":1,"prompt":"p","response":"r"})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, "x"), doctest::Contains("\"id\""), std::runtime_error);
}

TEST_CASE("loader rejects empty id and empty prompt") {
    TempDir tmp;
    const std::string p1 =
        write_file(tmp.path / "e1.jsonl", R"({"id":"","prompt":"p","response":"r"})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(p1, "x"), doctest::Contains("empty id"), std::runtime_error);
    const std::string p2 =
        write_file(tmp.path / "e2.jsonl", R"({"id":"a","prompt":"","response":"r"})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(p2, "x"), doctest::Contains("empty prompt"),
                         std::runtime_error);
}

TEST_CASE("empty response is allowed for generation-only probes") {
    TempDir tmp;
    const std::string path =
        write_file(tmp.path / "gen.jsonl", R"({"id":"a","prompt":"p","response":""})" "\n");
    const Corpus c = load_corpus(path, "x");
    REQUIRE(c.size() == 1);
    CHECK(c.samples[0].response.empty());
}

TEST_CASE("duplicate ids are reported with both line numbers") {
    TempDir tmp;
    const std::string path = write_file(tmp.path / "dup.jsonl",
                                        R"({"id":"a","prompt":"p","response":"r"})" "\n"
                                        R"({"id":"b","prompt":"p","response":"r"})" "\n"
                                        R"({"id":"a","prompt":"q","response":"s"})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, "x"),
                         doctest::Contains("duplicate id \"a\" on lines 1 and 3"),
                         std::runtime_error);
}

TEST_CASE("loader skips blank lines and tolerates CRLF") {
    TempDir tmp;
    const std::string path = write_file(tmp.path / "crlf.jsonl",
                                        "\r\n"
                                        "{\"id\":\"a\",\"prompt\":\"p\",\"response\":\"r\"}\r\n"
                                        "\n"
                                        "{\"id\":\"b\",\"prompt\":\"p\",\"response\":\"r\"}\n");
    const Corpus c = load_corpus(path, "x");
    CHECK(c.size() == 2);
}

TEST_CASE("unknown fields are ignored") {
    TempDir tmp;
    const std::string path = write_file(
        tmp.path / "extra.jsonl",
        R"({"id":"a","prompt":"p","response":"r","annotator":"someone","score":3})" "\n");
    const Corpus c = load_corpus(path, "x");
    REQUIRE(c.size() == 1);
    CHECK(c.samples[0].id == "a");
}

TEST_CASE("unknown category names fail with the line number") {
    TempDir tmp;
    const std::string path = write_file(
        tmp.path / "cat.jsonl",
        R"({"id":"a","prompt":"p","response":"r","category":"mystery"})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, "x"), doctest::Contains(":1:"), std::runtime_error);
}

TEST_CASE("category names round-trip") {
    for (Category c : {Category::harmful, Category::knowledge, Category::hallucination,
                       Category::normal, Category::unspecified}) {
        CHECK(category_from_name(category_name(c)) == c);
    }
    CHECK_THROWS_AS(category_from_name("nope"), std::runtime_error);
}

TEST_CASE("missing file errors mention the path") {
    CHECK_THROWS_WITH_AS(load_corpus("/nonexistent/nowhere.jsonl", "x"),
                         doctest::Contains("/nonexistent/nowhere.jsonl"), std::runtime_error);
}

TEST_CASE("find locates samples by id") {
    const Corpus c = sample_corpus();
    REQUIRE(c.find("b") != nullptr);
    CHECK(c.find("b")->prompt == "Access code for site alpha: ");
    CHECK(c.find("zzz") == nullptr);
}

TEST_CASE("merge_disjoint concatenates in order and names the result") {
    Corpus a = sample_corpus();
    Corpus b;
    b.name = "other";
    Sample s;
    s.id = "c";
    s.prompt = "p";
    s.response = "r";
    b.samples = {s};

    const Corpus merged = merge_disjoint(a, b);
    CHECK(merged.name == "fixture+other");
    REQUIRE(merged.size() == 3);
    CHECK(merged.samples[0].id == "a");
    CHECK(merged.samples[2].id == "c");
}

TEST_CASE("merge_disjoint rejects overlapping ids, listing them") {
    const Corpus a = sample_corpus();
    CHECK_THROWS_WITH_AS(merge_disjoint(a, a), doctest::Contains("\"a\""), std::runtime_error);
}

TEST_CASE("partition validation allows good/retain overlap but not unlearn overlap") {
    CorpusPartition p;
    p.unlearn_set = sample_corpus();
    Corpus other;
    other.name = "other";
    Sample s;
    s.id = "x";
    s.prompt = "p";
    s.response = "r";
    other.samples = {s};
    p.good_set = other;
    p.retain_set = other;  // aliasing one corpus to both roles is fine
    CHECK_NOTHROW(validate_partition(p));

    p.retain_set.samples.push_back(p.unlearn_set.samples[0]);
    CHECK_THROWS_WITH_AS(validate_partition(p), doctest::Contains("\"a\""), std::runtime_error);
}
