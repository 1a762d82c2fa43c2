#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wmtkit::utf8 {

class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::size_t offset, const std::string& what)
      : std::runtime_error(what), offset_(offset) {}

  /// Byte offset of the first malformed sequence.
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

inline constexpr char32_t kReplacementChar = U'�';

/// Strict decode. Overlong forms, encoded surrogates and values above
/// U+10FFFF are rejected with DecodeError.
std::u32string decode(std::string_view bytes);

/// Lossy decode: every malformed sequence becomes one U+FFFD.
std::u32string decode_lossy(std::string_view bytes);

bool is_valid(std::string_view bytes);

void append(std::string& out, char32_t cp);
std::string encode(std::u32string_view cps);

/// Number of codepoints in a valid UTF-8 string.
std::size_t length(std::string_view bytes);

bool is_space(char32_t cp);
bool is_punct(char32_t cp);

}  // namespace wmtkit::utf8
