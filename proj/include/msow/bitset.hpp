#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace msow {

// Fixed-size bitset over a structure universe. Values are compared and
// hashed by content, so they can serve as memoization keys.
class Bitset {
public:
  Bitset() = default;
  explicit Bitset(int n) : n_(n), w_((n + 63) / 64, 0) {}

  int size() const { return n_; }
  bool test(int i) const { return (w_[i >> 6] >> (i & 63)) & 1; }
  void set(int i) { w_[i >> 6] |= uint64_t(1) << (i & 63); }
  void reset(int i) { w_[i >> 6] &= ~(uint64_t(1) << (i & 63)); }

  int count() const {
    int c = 0;
    for (uint64_t w : w_) c += __builtin_popcountll(w);
    return c;
  }
  bool any() const {
    for (uint64_t w : w_)
      if (w) return true;
    return false;
  }
  bool none() const { return !any(); }

  bool operator==(const Bitset& o) const { return n_ == o.n_ && w_ == o.w_; }
  bool operator!=(const Bitset& o) const { return !(*this == o); }
  bool operator<(const Bitset& o) const { return w_ < o.w_; }

  Bitset& operator|=(const Bitset& o) {
    for (size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i];
    return *this;
  }
  Bitset& operator&=(const Bitset& o) {
    for (size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i];
    return *this;
  }
  friend Bitset operator|(Bitset a, const Bitset& b) { return a |= b; }
  friend Bitset operator&(Bitset a, const Bitset& b) { return a &= b; }

  // this \ o
  Bitset minus(const Bitset& o) const {
    Bitset r(*this);
    for (size_t i = 0; i < w_.size(); ++i) r.w_[i] &= ~o.w_[i];
    return r;
  }
  bool subset_of(const Bitset& o) const {
    for (size_t i = 0; i < w_.size(); ++i)
      if (w_[i] & ~o.w_[i]) return false;
    return true;
  }
  bool intersects(const Bitset& o) const {
    for (size_t i = 0; i < w_.size(); ++i)
      if (w_[i] & o.w_[i]) return true;
    return false;
  }

  // first set bit at index >= from, or -1
  int next(int from) const {
    for (int i = from; i < n_;) {
      uint64_t w = w_[i >> 6] >> (i & 63);
      if (w) return i + __builtin_ctzll(w);
      i = (i & ~63) + 64;
    }
    return -1;
  }

  std::vector<int> members() const {
    std::vector<int> r;
    for (int i = next(0); i != -1; i = next(i + 1)) r.push_back(i);
    return r;
  }

  size_t hash() const {
    size_t h = std::hash<int>()(n_);
    for (uint64_t w : w_) h = h * 1099511628211ull ^ std::hash<uint64_t>()(w);
    return h;
  }

private:
  int n_ = 0;
  std::vector<uint64_t> w_;
};

}  // namespace msow
