#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace moodshift::unicode {

/// Decodes UTF-8; malformed bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

/// Pictographic codepoints treated as standalone sentiment tokens.
bool is_emoji(char32_t cp);
/// Variation selectors, ZWJ and skin-tone modifiers: glue inside emoji
/// sequences that carries no meaning of its own.
bool is_emoji_modifier(char32_t cp);
bool is_whitespace(char32_t cp);

/// Canonical composition (NFC).
std::string nfc(std::string_view s);

/// ASCII-only lowercase; non-ASCII bytes pass through.
std::string ascii_lower(std::string_view s);

}  // namespace moodshift::unicode
