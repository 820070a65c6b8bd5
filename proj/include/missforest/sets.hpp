#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace missforest {

// Small set of 1-based indicator indices backed by a 64-bit mask.
class IndSet {
 public:
  constexpr IndSet() = default;

  constexpr IndSet(std::initializer_list<int> xs) {
    for (int x : xs) insert(x);
  }

  constexpr void insert(int i) { bits_ |= bit(i); }
  constexpr void erase(int i) { bits_ &= ~bit(i); }
  constexpr bool contains(int i) const { return (bits_ & bit(i)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  int size() const { return __builtin_popcountll(bits_); }

  constexpr IndSet operator|(IndSet o) const { return from_bits(bits_ | o.bits_); }
  constexpr IndSet operator&(IndSet o) const { return from_bits(bits_ & o.bits_); }
  constexpr IndSet operator-(IndSet o) const { return from_bits(bits_ & ~o.bits_); }
  IndSet& operator|=(IndSet o) { bits_ |= o.bits_; return *this; }
  IndSet& operator&=(IndSet o) { bits_ &= o.bits_; return *this; }
  IndSet& operator-=(IndSet o) { bits_ &= ~o.bits_; return *this; }

  constexpr bool operator==(const IndSet&) const = default;

  constexpr bool intersects(IndSet o) const { return (bits_ & o.bits_) != 0; }
  constexpr bool subset_of(IndSet o) const { return (bits_ & ~o.bits_) == 0; }

  // Members in ascending order.
  std::vector<int> to_vector() const {
    std::vector<int> out;
    for (std::uint64_t b = bits_; b != 0; b &= b - 1)
      out.push_back(__builtin_ctzll(b) + 1);
    return out;
  }

  int min_element() const { return empty() ? 0 : __builtin_ctzll(bits_) + 1; }

  // "{R1,R3}" or "{}"; stable, ascending.
  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (int i : to_vector()) {
      if (!first) s += ",";
      s += "R" + std::to_string(i);
      first = false;
    }
    return s + "}";
  }

 private:
  static constexpr std::uint64_t bit(int i) { return std::uint64_t{1} << (i - 1); }
  static constexpr IndSet from_bits(std::uint64_t b) {
    IndSet s;
    s.bits_ = b;
    return s;
  }
  std::uint64_t bits_ = 0;
};

}  // namespace missforest
