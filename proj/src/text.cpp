#include "citysvc/text.hpp"

#include <cstdint>

namespace citysvc::text {
namespace {

// Latin-1 Supplement U+00C0..U+00FF folded to ASCII. '\0' means "not a letter".
constexpr char kLatin1Fold[64] = {
    'a', 'a', 'a', 'a', 'a', 'a', 'a', 'c',  // C0-C7
    'e', 'e', 'e', 'e', 'i', 'i', 'i', 'i',  // C8-CF
    'd', 'n', 'o', 'o', 'o', 'o', 'o', '\0',  // D0-D7 (D7 = multiplication sign)
    'o', 'u', 'u', 'u', 'u', 'y', '\0', 's',  // D8-DF
    'a', 'a', 'a', 'a', 'a', 'a', 'a', 'c',  // E0-E7
    'e', 'e', 'e', 'e', 'i', 'i', 'i', 'i',  // E8-EF
    'd', 'n', 'o', 'o', 'o', 'o', 'o', '\0',  // F0-F7 (F7 = division sign)
    'o', 'u', 'u', 'u', 'u', 'y', '\0', 'y',  // F8-FF
};

// Decodes one code point starting at s[i]; advances i. Returns -1 on bad input.
std::int32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto lead = static_cast<unsigned char>(s[i++]);
  if (lead < 0x80) return lead;
  int extra = 0;
  std::int32_t cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    return -1;
  }
  for (int k = 0; k < extra; ++k) {
    if (i >= s.size()) return -1;
    const auto c = static_cast<unsigned char>(s[i]);
    if ((c & 0xC0) != 0x80) return -1;
    cp = (cp << 6) | (c & 0x3F);
    ++i;
  }
  return cp;
}

char fold_code_point(std::int32_t cp) {
  if (cp < 0) return ' ';
  if (cp < 0x80) {
    const char c = static_cast<char>(cp);
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  if (cp >= 0xC0 && cp <= 0xFF) {
    const char folded = kLatin1Fold[cp - 0xC0];
    return folded == '\0' ? ' ' : folded;
  }
  return ' ';
}

std::vector<std::string> split_words(std::string_view utf8, bool keep_ampersand) {
  const std::string folded = fold(utf8);
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char c : folded) {
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      current.push_back(c);
    } else if (c == '&' && keep_ampersand) {
      flush();
      out.emplace_back("&");
    } else {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace

std::string fold(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  std::size_t i = 0;
  while (i < utf8.size()) out.push_back(fold_code_point(next_code_point(utf8, i)));
  return out;
}

std::vector<std::string> words(std::string_view utf8) { return split_words(utf8, false); }

std::vector<std::string> words_keep_ampersand(std::string_view utf8) {
  return split_words(utf8, true);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep, std::size_t first,
                 std::size_t last) {
  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace citysvc::text
