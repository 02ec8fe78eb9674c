#pragma once

#include <compare>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>

namespace transgram {

/// Short lowercase language code such as "en" or "fr".
///
/// Codes are restricted to [a-z0-9_-] so that `lang:word` tokens can always be
/// split at the first ':'.
class LanguageId {
public:
    LanguageId() = default;
    explicit LanguageId(std::string code);

    const std::string& code() const noexcept { return code_; }
    bool empty() const noexcept { return code_.empty(); }

    friend auto operator<=>(const LanguageId&, const LanguageId&) = default;
    friend bool operator==(const LanguageId&, const LanguageId&) = default;

private:
    std::string code_;
};

inline std::ostream& operator<<(std::ostream& os, const LanguageId& id) { return os << id.code(); }

/// A word tagged with its language, written `lang:word` on the command line
/// and in prefixed embedding files.
struct TaggedWord {
    LanguageId language;
    std::string word;

    friend bool operator==(const TaggedWord&, const TaggedWord&) = default;
};

/// Splits `lang:word` at the first ':'. Throws std::invalid_argument when the
/// separator is missing or either side is empty.
TaggedWord parse_tagged_word(std::string_view text);
std::string format_tagged_word(const LanguageId& language, std::string_view word);

}  // namespace transgram

template <>
struct std::hash<transgram::LanguageId> {
    std::size_t operator()(const transgram::LanguageId& id) const noexcept {
        return std::hash<std::string>{}(id.code());
    }
};
