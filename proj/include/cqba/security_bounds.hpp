#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cqba {

using BigInt = boost::multiprecision::cpp_int;

struct BoundInputs {
  int N = 3;
  int f = 0;
  double m = 1;
  double n = 2;
  double eps_kgp = 0;

  /// Throws std::invalid_argument unless N >= 3, 0 <= f <= N-2, m >= 1,
  /// n >= 2 and eps_kgp in [0, 1].
  void validate() const;
};

/// (N-1)m + (2N-3)n, the signing input of the last gathering hop.
double longest_message(int N, double m, double n);

/// f eps(m,n) + f(N-f-1) eps(L_{N-1},n), clamped to 1.
double case1_failure(const BoundInputs& in);
/// (f-1)(N-f) eps(L_{N-1},n); zero when f <= 1. Clamped to 1.
double case2_failure(const BoundInputs& in);
double qba_failure(const BoundInputs& in);
/// qba_failure + eps_kgp, clamped to 1.
double total_failure(const BoundInputs& in);

/// Unclamped log2 forms; -infinity when the bound is exactly zero. Usable
/// where the linear values underflow.
double log2_case1_failure(const BoundInputs& in);
double log2_case2_failure(const BoundInputs& in);
double log2_qba_failure(const BoundInputs& in);

/// N >= f + 2.
bool fault_tolerance_ok(int N, int f);

enum class QbaProtocol { circular, qkd_based, recursive };
std::string_view protocol_name(QbaProtocol p);
QbaProtocol parse_protocol(std::string_view name);

/// Exact round counts: N^2 - N; sum_{r=1}^{f+1} P(N-1, r);
/// sum_{r=0}^{f-1} P(N-1, r+2).
BigInt complexity(QbaProtocol p, int N, int f);
/// Smallest N tolerating f malicious players: f+2, 3f+1 and 2f+1.
int minimal_players(QbaProtocol p, int f);
/// P(n, r) = n! / (n-r)!, zero when r > n.
BigInt permutations(int n, int r);
/// Three significant figures, e.g. "2.30e+15".
std::string scientific3(const BigInt& v);

/// Smallest n >= 2 with qba_failure(N, f, m, n) <= target.
/// Throws std::invalid_argument unless 0 < target < 1.
std::size_t signature_length_planner(int N, int f, double m, double target);

/// Hop at which lieutenant j signs in the gathering started by `initiator`,
/// with lieutenants 1..N-1 on the ring.
int signing_hop(int N, int initiator, int j);

/// 1 - prod over honest initiators and dishonest signers of
/// (1 - eps(L_hop, n)), for the dishonest lieutenant set tau_d.
double gathering_failure_exact(int N, const std::vector<int>& tau_d, double m, double n);
/// N_d (N - N_d - 1) eps(L_{N-1}, n).
double gathering_failure_sup(int N, int N_d, double m, double n);

}  // namespace cqba
