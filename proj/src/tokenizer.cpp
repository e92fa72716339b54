#include "lethe/tokenizer.hpp"

#include <sstream>
#include <stdexcept>

namespace lethe {

CharTokenizer::CharTokenizer(std::string alphabet) : alphabet_(std::move(alphabet)) {
    if (alphabet_.empty()) {
        throw std::invalid_argument("tokenizer alphabet must be non-empty");
    }
    char_to_id_.fill(-1);
    for (int i = 0; i < static_cast<int>(alphabet_.size()); ++i) {
        unsigned char c = static_cast<unsigned char>(alphabet_[i]);
        if (char_to_id_[c] != -1) {
            throw std::invalid_argument("tokenizer alphabet has a duplicate character");
        }
        char_to_id_[c] = i;
    }
}

CharTokenizer CharTokenizer::ascii() {
    std::string alphabet;
    alphabet.reserve(96);
    for (int c = 0x20; c <= 0x7E; ++c) alphabet.push_back(static_cast<char>(c));
    alphabet.push_back('\n');
    return CharTokenizer(alphabet);
}

std::vector<int> CharTokenizer::encode(std::string_view text) const {
    std::vector<int> ids;
    ids.reserve(text.size());
    for (char c : text) {
        int id = char_to_id_[static_cast<unsigned char>(c)];
        if (id < 0) {
            std::ostringstream msg;
            msg << "character not in tokenizer alphabet: 0x" << std::hex
                << static_cast<int>(static_cast<unsigned char>(c));
            throw std::runtime_error(msg.str());
        }
        ids.push_back(id);
    }
    return ids;
}

std::string CharTokenizer::decode(const std::vector<int>& ids) const {
    std::string text;
    text.reserve(ids.size());
    for (int id : ids) {
        if (id == eos_id()) continue;
        if (id < 0 || id > eos_id()) {
            throw std::runtime_error("token id out of range: " + std::to_string(id));
        }
        text.push_back(alphabet_[static_cast<std::size_t>(id)]);
    }
    return text;
}

}  // namespace lethe
