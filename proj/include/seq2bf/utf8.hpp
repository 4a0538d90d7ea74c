#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace seq2bf::utf8 {

/// Decodes UTF-8 into code points. Invalid sequences decode to U+FFFD.
std::u32string decode(std::string_view text);

std::string encode(char32_t cp);
std::string encode(std::u32string_view text);

/// Splits on single ASCII spaces, dropping empty tokens.
std::vector<std::string> split_words(std::string_view text);

}  // namespace seq2bf::utf8
