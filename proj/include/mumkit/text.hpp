#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace mumkit {

/// Identifier recorded with every corpus so rankings can be tied to the rule
/// that produced the token positions.
inline constexpr std::string_view kTokenizerId = "ws-strip-punct/1";

/// A token is the punctuation-stripped core of a whitespace-delimited piece.
/// `begin`/`end` are byte offsets of the core inside the source text.
struct Token {
  std::string surface;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Whitespace split, then strip leading/trailing ASCII punctuation. Pieces
/// that are pure punctuation produce no token.
std::vector<Token> tokenize(std::string_view text);

/// ASCII lower-casing; bytes >= 0x80 pass through untouched.
std::string casefold(std::string_view s);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with_upper(std::string_view s);
std::string capitalize_first(std::string s);

/// Decode UTF-8 into code points; invalid bytes map to themselves.
std::u32string utf8_decode(std::string_view s);

std::string sha256_hex(std::string_view data);

/// 64-bit FNV-1a over the parts (with a separator byte), finalized through
/// splitmix64 and mixed with `seed`. Used to key deterministic draws.
std::uint64_t hash_key(std::uint64_t seed, std::initializer_list<std::string_view> parts);

std::uint64_t splitmix64(std::uint64_t x);

/// Uniform double in [0, 1) from the top 53 bits.
double unit_draw(std::uint64_t bits);

/// Small counter-based generator. Identical sequences on every platform,
/// unlike std::uniform_int_distribution.
class DrawStream {
 public:
  explicit DrawStream(std::uint64_t key) : state_(key) {}
  std::uint64_t next() { return splitmix64(state_ += 0x9E3779B97F4A7C15ULL); }
  double uniform() { return unit_draw(next()); }
  /// Uniform integer in [0, bound).
  std::size_t below(std::size_t bound);
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::uint64_t state_;
};

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view data);

/// Fixed-precision formatting ("%.*f") used by every text artifact.
std::string fixed(double v, int precision);

}  // namespace mumkit
