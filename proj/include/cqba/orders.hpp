#pragma once

#include <cstddef>
#include <vector>

#include "cqba/bitvec.hpp"

namespace cqba {

/// An order together with the general's signature on it.
struct OrderList {
  BitVec message;
  BitVec signature;

  friend bool operator==(const OrderList&, const OrderList&) = default;
};

/// The list travelling around the ring in one circular gathering. After the
/// hop j -> j+1 it holds j orders and j hop signatures; orders[k] belongs to
/// the k-th lieutenant clockwise from the initiator.
struct GatherState {
  int initiator = 0;
  std::vector<OrderList> orders;
  std::vector<BitVec> hop_sigs;
  int current_hop = 0;

  /// m_1 || s_1 || h_1 || m_2 || s_2 || h_2 || ... with only the hop
  /// signatures present so far. This is the message signed at each hop.
  BitVec signing_input() const;

  /// Inverse of signing_input for `count` orders of m bits and n-bit
  /// signatures with count - 1 hop signatures. Throws std::invalid_argument
  /// on a length mismatch.
  static GatherState parse(const BitVec& bits, int initiator, std::size_t count, std::size_t m,
                           std::size_t n);

  friend bool operator==(const GatherState&, const GatherState&) = default;
};

/// Clockwise successor among lieutenants 1..lieutenants (wrapping to 1).
inline int next_lieutenant(int j, int lieutenants) { return j % lieutenants + 1; }

/// Owner of position k (0-based) in a gathering started by `initiator`.
inline int owner_at(int initiator, std::size_t k, int lieutenants) {
  return static_cast<int>((static_cast<std::size_t>(initiator - 1) + k) % static_cast<std::size_t>(lieutenants)) + 1;
}

}  // namespace cqba
