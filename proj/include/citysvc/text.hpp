#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace citysvc::text {

// Lowercases ASCII and maps accented Latin letters (á, Ñ, ü, ç, ...) to their
// unaccented base letter. Other non-ASCII code points are replaced by a space.
// Invalid UTF-8 bytes are treated as spaces.
std::string fold(std::string_view utf8);

// fold(), then every character that is not [a-z0-9] becomes a separator.
// Empty words are dropped; no length filter is applied.
std::vector<std::string> words(std::string_view utf8);

// Like words() but keeps '&' as a standalone word.
std::vector<std::string> words_keep_ampersand(std::string_view utf8);

std::string join(const std::vector<std::string>& parts, std::string_view sep, std::size_t first,
                 std::size_t last);

}  // namespace citysvc::text
