#pragma once

#include <cstddef>
#include <string_view>

namespace ficoco {

/// V reduces inside the (bidirectional) vision encoder, L inside the causal
/// language decoder.
enum class Variant { V, L };

enum class TokenRole { Cls, Visual, Text };

struct GridPos {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const GridPos&, const GridPos&) = default;
};

constexpr std::string_view to_string(Variant v) { return v == Variant::V ? "V" : "L"; }

constexpr std::string_view to_string(TokenRole r) {
  switch (r) {
    case TokenRole::Cls:
      return "cls";
    case TokenRole::Visual:
      return "visual";
    case TokenRole::Text:
      return "text";
  }
  return "?";
}

}  // namespace ficoco
