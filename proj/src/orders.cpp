#include "cqba/orders.hpp"

#include <stdexcept>

namespace cqba {

BitVec GatherState::signing_input() const {
  BitVec out;
  for (std::size_t k = 0; k < orders.size(); ++k) {
    out.append(orders[k].message);
    out.append(orders[k].signature);
    if (k < hop_sigs.size()) out.append(hop_sigs[k]);
  }
  return out;
}

GatherState GatherState::parse(const BitVec& bits, int initiator, std::size_t count, std::size_t m,
                               std::size_t n) {
  if (count == 0 || bits.size() != count * (m + n) + (count - 1) * n) {
    throw std::invalid_argument("GatherState::parse: length mismatch");
  }
  GatherState g;
  g.initiator = initiator;
  g.current_hop = static_cast<int>(count);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < count; ++k) {
    OrderList o{bits.slice(pos, m), bits.slice(pos + m, n)};
    pos += m + n;
    g.orders.push_back(std::move(o));
    if (k + 1 < count) {
      g.hop_sigs.push_back(bits.slice(pos, n));
      pos += n;
    }
  }
  return g;
}

}  // namespace cqba
