#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ksplit {

// Finite word over the symbol alphabet {1..m}. The empty word is valid and
// serializes to "". Nonempty words serialize as comma-separated symbols, "2,1".
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<int> symbols) : s_(std::move(symbols)) {}
  Word(std::initializer_list<int> symbols) : s_(symbols) {}

  static std::optional<Word> parse(const std::string& text);
  std::string str() const;

  int size() const { return static_cast<int>(s_.size()); }
  bool empty() const { return s_.empty(); }
  int at(int i) const { return s_[static_cast<size_t>(i)]; }
  const std::vector<int>& symbols() const { return s_; }

  Word prepended(int symbol) const;
  Word appended(int symbol) const;
  Word concat(const Word& tail) const;
  // sigma_*: drop the first symbol; shift of the empty word is empty.
  Word shifted() const;
  Word prefix(int n) const;
  // cyclic left rotation by one
  Word rotated() const;

  bool ends_with(int symbol) const { return !s_.empty() && s_.back() == symbol; }
  bool is_prefix_of(const Word& w) const;

  auto operator<=>(const Word&) const = default;

 private:
  std::vector<int> s_;
};

// Eventually periodic sequence head . tail tail tail ... in Sigma.
// Canonical form: tail has minimal period and the head does not share its
// trailing symbol with the representation obtained by rotating the tail.
class CodedPoint {
 public:
  CodedPoint(Word head, Word tail);
  static CodedPoint periodic(Word tail) { return CodedPoint(Word{}, std::move(tail)); }

  const Word& head() const { return head_; }
  const Word& tail() const { return tail_; }
  int symbol_at(int i) const;  // 0-based
  std::string str() const;     // "head|tail", e.g. "2|1" for 2111...

  bool operator==(const CodedPoint& o) const { return head_ == o.head_ && tail_ == o.tail_; }

 private:
  void canonicalize();
  Word head_, tail_;
};

}  // namespace ksplit
