#pragma once

#include <cstdint>

#include "lethe/corpus.hpp"
#include "lethe/transformer.hpp"

namespace lethe {

// Default geometry for the bundled model: 2 layers, 2 heads, width 64,
// context 128, over the printable-ASCII tokenizer.
TransformerConfig demo_model_config();

// n secret-bearing prompt/response pairs ("Access code for site alpha: " ->
// "5086-1898-1065" at seed 7), category knowledge, secret field set; the digit
// codes are seeded and distinct, and share no characters with the normal
// corpus.
Corpus make_secret_corpus(int n, std::uint64_t seed);

// 20 handwritten everyday Q&A pairs, category normal.
Corpus make_normal_corpus();

}  // namespace lethe
