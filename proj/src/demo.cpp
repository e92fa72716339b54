#include "lethe/demo.hpp"

#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace lethe {

TransformerConfig demo_model_config() {
    TransformerConfig cfg;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.d_model = 64;
    cfg.max_context = 128;
    cfg.vocab_size = 97;
    return cfg;
}

namespace {

const char* kSiteNames[] = {
    "alpha",  "bravo",  "charlie", "delta",    "echo",   "foxtrot", "golf",
    "hotel",  "india",  "juliett", "kilo",     "lima",   "mike",    "november",
    "oscar",  "papa",   "quebec",  "romeo",    "sierra", "tango",   "uniform",
    "victor", "whisky", "xray",    "yankee",   "zulu",
};

// Digit-only codes: the secret payload shares no characters with the bundled
// retain corpus, so suppressing it leaves ordinary text mostly untouched.
std::string random_secret(std::mt19937_64& rng) {
    std::string s;
    for (int i = 0; i < 14; ++i) {
        if (i == 4 || i == 9) {
            s.push_back('-');
            continue;
        }
        s.push_back(static_cast<char>('0' + rng() % 10));
    }
    return s;
}

}  // namespace

Corpus make_secret_corpus(int n, std::uint64_t seed) {
    constexpr int kMaxSites = static_cast<int>(sizeof(kSiteNames) / sizeof(kSiteNames[0]));
    if (n < 1 || n > kMaxSites) {
        throw std::invalid_argument("secret corpus supports 1.." + std::to_string(kMaxSites) +
                                    " samples");
    }
    std::mt19937_64 rng(seed);
    std::set<std::string> used;
    Corpus c;
    c.name = "secrets";
    for (int i = 0; i < n; ++i) {
        std::string secret = random_secret(rng);
        while (!used.insert(secret).second) secret = random_secret(rng);
        Sample s;
        s.id = "secret-" + std::to_string(i + 1);
        s.prompt = std::string("Access code for site ") + kSiteNames[i] + ": ";
        s.response = secret;
        s.category = Category::knowledge;
        s.secret = secret;
        c.samples.push_back(std::move(s));
    }
    return c;
}

Corpus make_normal_corpus() {
    static const char* kPairs[][2] = {
        {"What color is the sky?", " Blue."},
        {"What color is grass?", " Green."},
        {"How many legs has a cat?", " Four."},
        {"What is two plus two?", " Four."},
        {"What do bees make?", " Honey."},
        {"What do cows drink as calves?", " Milk."},
        {"Which season is coldest?", " Winter."},
        {"What melts in the sun?", " Ice."},
        {"Where do fish live?", " In water."},
        {"What do you read?", " A book."},
        {"What shines at night?", " The moon."},
        {"How many days in a week?", " Seven."},
        {"What falls in winter?", " Snow."},
        {"What do birds lay?", " Eggs."},
        {"Which fruit is yellow?", " A banana."},
        {"What do you drink hot?", " Tea."},
        {"What barks?", " A dog."},
        {"What do wheels do?", " They roll."},
        {"Where does the sun rise?", " The east."},
        {"What is frozen water?", " Ice."},
    };
    Corpus c;
    c.name = "normals";
    int i = 0;
    for (const auto& pair : kPairs) {
        Sample s;
        s.id = "normal-" + std::to_string(++i);
        s.prompt = pair[0];
        s.response = pair[1];
        s.category = Category::normal;
        c.samples.push_back(std::move(s));
    }
    return c;
}

}  // namespace lethe
