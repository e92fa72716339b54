#pragma once

#include <cstdint>

#include "lethe/corpus.hpp"
#include "lethe/model.hpp"

namespace lethe {

struct PretrainResult {
    int epochs{0};
    double final_loss{0.0};
    bool memorized{false};
};

// Adam fine-tuning on the per-token cross-entropy of response + end-of-sequence
// given the prompt, one sample per step, until every greedy continuation
// reproduces its stored response exactly (or max_epochs runs out). Used to
// manufacture a model that has fully memorized a corpus.
PretrainResult memorize_corpus(ModelHandle& model, const Corpus& corpus, int max_epochs,
                               double lr);

}  // namespace lethe
