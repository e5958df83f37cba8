#include "cqba/security_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "cqba/lfsr_toeplitz.hpp"

namespace cqba {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log2(2^a + 2^b).
double log2_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log2(1.0 + std::exp2(lo - hi));
}

double log2_count(double c) { return c > 0 ? std::log2(c) : kNegInf; }

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

void BoundInputs::validate() const {
  if (N < 3) throw std::invalid_argument("N must be at least 3");
  if (f < 0 || f > N - 2) throw std::invalid_argument("f must satisfy 0 <= f <= N-2");
  if (m < 1) throw std::invalid_argument("m must be at least 1");
  if (n < 2) throw std::invalid_argument("n must be at least 2");
  if (!(eps_kgp >= 0 && eps_kgp <= 1)) throw std::invalid_argument("eps_kgp must lie in [0,1]");
}

double longest_message(int N, double m, double n) { return (N - 1) * m + (2.0 * N - 3) * n; }

double log2_case1_failure(const BoundInputs& in) {
  in.validate();
  const double L = longest_message(in.N, in.m, in.n);
  return log2_add(log2_count(in.f) + log2_forgery_bound(in.m, in.n),
                  log2_count(static_cast<double>(in.f) * (in.N - in.f - 1)) + log2_forgery_bound(L, in.n));
}

double log2_case2_failure(const BoundInputs& in) {
  in.validate();
  const double L = longest_message(in.N, in.m, in.n);
  return log2_count(static_cast<double>(in.f - 1) * (in.N - in.f)) + log2_forgery_bound(L, in.n);
}

double log2_qba_failure(const BoundInputs& in) { return std::max(log2_case1_failure(in), log2_case2_failure(in)); }

double case1_failure(const BoundInputs& in) {
  in.validate();
  const double L = longest_message(in.N, in.m, in.n);
  return clamp01(in.f * forgery_bound(in.m, in.n) + in.f * (in.N - in.f - 1.0) * forgery_bound(L, in.n));
}

double case2_failure(const BoundInputs& in) {
  in.validate();
  if (in.f <= 1) return 0.0;
  const double L = longest_message(in.N, in.m, in.n);
  return clamp01((in.f - 1.0) * (in.N - in.f) * forgery_bound(L, in.n));
}

double qba_failure(const BoundInputs& in) { return std::max(case1_failure(in), case2_failure(in)); }

double total_failure(const BoundInputs& in) { return clamp01(qba_failure(in) + in.eps_kgp); }

bool fault_tolerance_ok(int N, int f) { return N >= f + 2; }

std::string_view protocol_name(QbaProtocol p) {
  switch (p) {
    case QbaProtocol::circular:
      return "circular";
    case QbaProtocol::qkd_based:
      return "qkd_based";
    case QbaProtocol::recursive:
      return "recursive";
  }
  return "unknown";
}

QbaProtocol parse_protocol(std::string_view name) {
  for (QbaProtocol p : {QbaProtocol::circular, QbaProtocol::qkd_based, QbaProtocol::recursive}) {
    if (protocol_name(p) == name) return p;
  }
  throw std::invalid_argument("unknown protocol '" + std::string(name) + "'");
}

BigInt permutations(int n, int r) {
  if (n < 0 || r < 0) throw std::invalid_argument("permutations: negative argument");
  if (r > n) return 0;
  BigInt out = 1;
  for (int k = n - r + 1; k <= n; ++k) out *= k;
  return out;
}

BigInt complexity(QbaProtocol p, int N, int f) {
  if (N < 1 || f < 0) throw std::invalid_argument("complexity: need N >= 1 and f >= 0");
  BigInt total = 0;
  switch (p) {
    case QbaProtocol::circular:
      total = BigInt(N) * N - N;
      break;
    case QbaProtocol::qkd_based:
      for (int r = 1; r <= f + 1; ++r) total += permutations(N - 1, r);
      break;
    case QbaProtocol::recursive:
      for (int r = 0; r <= f - 1; ++r) total += permutations(N - 1, r + 2);
      break;
  }
  return total;
}

int minimal_players(QbaProtocol p, int f) {
  switch (p) {
    case QbaProtocol::circular:
      return f + 2;
    case QbaProtocol::qkd_based:
      return 3 * f + 1;
    case QbaProtocol::recursive:
      return 2 * f + 1;
  }
  return 0;
}

std::string scientific3(const BigInt& v) {
  // Exact rounding to 3 significant figures from the decimal expansion.
  std::string digits = v.str();
  const bool neg = !digits.empty() && digits[0] == '-';
  if (neg) digits.erase(0, 1);
  int exponent = static_cast<int>(digits.size()) - 1;
  while (digits.size() < 4) digits += '0';
  int lead = std::stoi(digits.substr(0, 3));
  if (digits[3] >= '5') ++lead;
  if (lead >= 1000) {
    lead /= 10;
    ++exponent;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%d.%02de%c%02d", neg ? "-" : "", lead / 100, lead % 100, exponent < 0 ? '-' : '+',
                std::abs(exponent));
  return buf;
}

std::size_t signature_length_planner(int N, int f, double m, double target) {
  if (!(target > 0 && target < 1)) throw std::invalid_argument("target must lie in (0,1)");
  const double log_target = std::log2(target);
  auto ok = [&](std::size_t n) {
    return log2_qba_failure(BoundInputs{N, f, m, static_cast<double>(n), 0}) <= log_target;
  };
  std::size_t hi = 2;
  while (!ok(hi)) hi *= 2;
  std::size_t lo = hi / 2;  // ok(lo) is false unless hi == 2
  if (hi == 2) return 2;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

int signing_hop(int N, int initiator, int j) {
  const int ring = N - 1;
  return ((j - initiator) % ring + ring) % ring + 1;
}

double gathering_failure_exact(int N, const std::vector<int>& tau_d, double m, double n) {
  double log_success = 0;
  for (int i = 1; i <= N - 1; ++i) {
    if (std::find(tau_d.begin(), tau_d.end(), i) != tau_d.end()) continue;
    for (int j : tau_d) {
      const int hop = signing_hop(N, i, j);
      const double L = hop * m + (2.0 * hop - 1) * n;
      log_success += std::log1p(-forgery_bound(L, n));
    }
  }
  return -std::expm1(log_success);
}

double gathering_failure_sup(int N, int N_d, double m, double n) {
  return N_d * (N - N_d - 1.0) * forgery_bound(longest_message(N, m, n), n);
}

}  // namespace cqba
