#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace lethe {

// Character-level tokenizer over a fixed alphabet. Token ids 0..|alphabet|-1
// map one-to-one onto alphabet characters; the id |alphabet| is reserved for
// the end-of-sequence token. decode(encode(text)) == text for any text made
// of alphabet characters.
class CharTokenizer {
  public:
    explicit CharTokenizer(std::string alphabet);

    // Printable ASCII (0x20..0x7E) plus '\n': vocab size 97 with EOS.
    static CharTokenizer ascii();

    int vocab_size() const { return static_cast<int>(alphabet_.size()) + 1; }
    int eos_id() const { return static_cast<int>(alphabet_.size()); }
    const std::string& alphabet() const { return alphabet_; }

    // Throws on characters outside the alphabet, naming the character.
    std::vector<int> encode(std::string_view text) const;

    // EOS tokens are skipped; out-of-range ids throw.
    std::string decode(const std::vector<int>& ids) const;

  private:
    std::string alphabet_;
    std::array<int, 256> char_to_id_;
};

}  // namespace lethe
