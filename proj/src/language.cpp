#include "transgram/language.hpp"

#include <stdexcept>

namespace transgram {

namespace {

bool valid_code_char(char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '_' || ch == '-';
}

}  // namespace

LanguageId::LanguageId(std::string code) : code_(std::move(code)) {
    if (code_.empty()) {
        throw std::invalid_argument("language code must be nonempty");
    }
    for (char ch : code_) {
        if (!valid_code_char(ch)) {
            throw std::invalid_argument("invalid language code '" + code_ +
                                        "': expected lowercase letters, digits, '-' or '_'");
        }
    }
}

TaggedWord parse_tagged_word(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
        throw std::invalid_argument("expected lang:word, got '" + std::string(text) + "'");
    }
    return TaggedWord{LanguageId(std::string(text.substr(0, colon))), std::string(text.substr(colon + 1))};
}

std::string format_tagged_word(const LanguageId& language, std::string_view word) {
    std::string out;
    out.reserve(language.code().size() + 1 + word.size());
    out.append(language.code());
    out.push_back(':');
    out.append(word);
    return out;
}

}  // namespace transgram
