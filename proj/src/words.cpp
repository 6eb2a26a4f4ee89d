#include "ksplit/words.hpp"

#include "ksplit/numeric.hpp"

#include <algorithm>

namespace ksplit {

std::optional<Word> Word::parse(const std::string& text) {
  std::vector<int> out;
  if (text.empty()) return Word(out);
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty()) return std::nullopt;
    int v = 0;
    for (char c : tok) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + (c - '0');
      if (v > 1'000'000) return std::nullopt;
    }
    if (v < 1) return std::nullopt;
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return Word(out);
}

std::string Word::str() const {
  std::string out;
  for (size_t i = 0; i < s_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s_[i]);
  }
  return out;
}

Word Word::prepended(int symbol) const {
  std::vector<int> t;
  t.reserve(s_.size() + 1);
  t.push_back(symbol);
  t.insert(t.end(), s_.begin(), s_.end());
  return Word(std::move(t));
}

Word Word::appended(int symbol) const {
  std::vector<int> t = s_;
  t.push_back(symbol);
  return Word(std::move(t));
}

Word Word::concat(const Word& tail) const {
  std::vector<int> t = s_;
  t.insert(t.end(), tail.s_.begin(), tail.s_.end());
  return Word(std::move(t));
}

Word Word::shifted() const {
  if (s_.empty()) return Word{};
  return Word(std::vector<int>(s_.begin() + 1, s_.end()));
}

Word Word::prefix(int n) const {
  n = std::min<int>(n, size());
  return Word(std::vector<int>(s_.begin(), s_.begin() + n));
}

Word Word::rotated() const {
  if (s_.size() < 2) return *this;
  std::vector<int> t(s_.begin() + 1, s_.end());
  t.push_back(s_.front());
  return Word(std::move(t));
}

bool Word::is_prefix_of(const Word& w) const {
  if (size() > w.size()) return false;
  return std::equal(s_.begin(), s_.end(), w.s_.begin());
}

CodedPoint::CodedPoint(Word head, Word tail) : head_(std::move(head)), tail_(std::move(tail)) {
  if (tail_.empty()) fail(Errc::EmptyWord, "coded point needs a nonempty periodic tail");
  canonicalize();
}

void CodedPoint::canonicalize() {
  // minimal period of the tail
  const auto& t = tail_.symbols();
  int n = tail_.size();
  for (int p = 1; p <= n / 2; ++p) {
    if (n % p != 0) continue;
    bool ok = true;
    for (int i = p; i < n && ok; ++i) ok = (t[static_cast<size_t>(i)] == t[static_cast<size_t>(i - p)]);
    if (ok) {
      tail_ = tail_.prefix(p);
      break;
    }
  }
  // absorb head symbols that match a right-rotation of the tail
  while (!head_.empty() && head_.symbols().back() == tail_.symbols().back()) {
    std::vector<int> rot;
    rot.reserve(static_cast<size_t>(tail_.size()));
    rot.push_back(tail_.symbols().back());
    rot.insert(rot.end(), tail_.symbols().begin(), tail_.symbols().end() - 1);
    tail_ = Word(std::move(rot));
    std::vector<int> h = head_.symbols();
    h.pop_back();
    head_ = Word(std::move(h));
  }
}

int CodedPoint::symbol_at(int i) const {
  if (i < head_.size()) return head_.at(i);
  return tail_.at((i - head_.size()) % tail_.size());
}

std::string CodedPoint::str() const { return head_.str() + "|" + tail_.str(); }

}  // namespace ksplit
