#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "z2h/types.hpp"

namespace z2h {

// Pauli string stored as X and Z bit masks; Y sits where both bits are set.
struct PauliWord {
  u64 x = 0;
  u64 z = 0;

  friend bool operator==(const PauliWord&, const PauliWord&) = default;
  friend auto operator<=>(const PauliWord& a, const PauliWord& b) {
    return std::pair(a.x, a.z) <=> std::pair(b.x, b.z);
  }

  char letter(int q) const {
    const bool bx = (x >> q) & 1u, bz = (z >> q) & 1u;
    return bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : 'I');
  }

  void set(int q, char c) {
    x &= ~bit(q);
    z &= ~bit(q);
    if (c == 'X' || c == 'Y') x |= bit(q);
    if (c == 'Z' || c == 'Y') z |= bit(q);
  }

  bool is_diagonal() const { return x == 0; }
  u64 support() const { return x | z; }

  // Character i of the string is qubit i.
  static PauliWord parse(const std::string& s) {
    PauliWord w;
    for (std::size_t q = 0; q < s.size(); ++q) {
      const char c = s[q];
      if (c != 'I' && c != 'X' && c != 'Y' && c != 'Z')
        throw Error("bad Pauli letter '" + std::string(1, c) + "'");
      w.set(static_cast<int>(q), c);
    }
    return w;
  }

  std::string str(int n_qubits) const {
    std::string s(static_cast<std::size_t>(n_qubits), 'I');
    for (int q = 0; q < n_qubits; ++q) s[static_cast<std::size_t>(q)] = letter(q);
    return s;
  }
};

inline cplx ipow(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

// a*b = phase * c
inline std::pair<cplx, PauliWord> multiply(const PauliWord& a, const PauliWord& b) {
  PauliWord c{a.x ^ b.x, a.z ^ b.z};
  const int k = popcount(a.x & a.z) + popcount(b.x & b.z) + 2 * popcount(a.z & b.x) -
                popcount(c.x & c.z);
  return {ipow(k), c};
}

// Amplitude picked up by basis state |b> under the word: P|b> = phase(b) |b ^ x>.
inline cplx word_phase(const PauliWord& w, u64 b) {
  cplx ph = ipow(popcount(w.x & w.z));
  return (popcount(b & w.z) & 1) ? -ph : ph;
}

struct PauliTerm {
  cplx coef;
  PauliWord word;
};

class PauliSum {
 public:
  PauliSum() = default;
  explicit PauliSum(int n_qubits) : n_(n_qubits) {}
  PauliSum(int n_qubits, std::vector<PauliTerm> terms) : n_(n_qubits), terms_(std::move(terms)) {}

  static PauliSum identity(int n_qubits, cplx c = 1.0) {
    PauliSum s(n_qubits);
    s.add(c, PauliWord{});
    return s;
  }

  static PauliSum single(int n_qubits, int q, char letter, cplx c = 1.0) {
    PauliWord w;
    w.set(q, letter);
    return PauliSum(n_qubits, {{c, w}});
  }

  int n_qubits() const { return n_; }
  const std::vector<PauliTerm>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  void add(cplx c, PauliWord w) { terms_.push_back({c, w}); }
  void add(cplx c, const std::string& s) { add(c, PauliWord::parse(s)); }

  PauliSum& operator+=(const PauliSum& o) {
    if (n_ == 0) n_ = o.n_;
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
  }
  PauliSum& operator-=(const PauliSum& o) { return *this += o * cplx{-1.0}; }
  PauliSum& operator*=(cplx c) {
    for (auto& t : terms_) t.coef *= c;
    return *this;
  }
  friend PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
  friend PauliSum operator-(PauliSum a, const PauliSum& b) { return a -= b; }
  friend PauliSum operator*(PauliSum a, cplx c) { return a *= c; }
  friend PauliSum operator*(cplx c, PauliSum a) { return a *= c; }

  friend PauliSum operator*(const PauliSum& a, const PauliSum& b) {
    PauliSum r(std::max(a.n_, b.n_));
    r.terms_.reserve(a.size() * b.size());
    for (const auto& ta : a.terms_)
      for (const auto& tb : b.terms_) {
        auto [ph, w] = multiply(ta.word, tb.word);
        r.terms_.push_back({ta.coef * tb.coef * ph, w});
      }
    return r.simplified();
  }

  // Merge equal words, drop negligible coefficients, sort canonically.
  PauliSum simplified(double tol = 1e-14) const {
    std::map<PauliWord, cplx> acc;
    for (const auto& t : terms_) acc[t.word] += t.coef;
    PauliSum r(n_);
    for (const auto& [w, c] : acc)
      if (std::abs(c) > tol) r.terms_.push_back({c, w});
    return r;
  }

  PauliSum adjoint() const {
    PauliSum r(n_);
    for (const auto& t : terms_) r.terms_.push_back({std::conj(t.coef), t.word});
    return r;
  }

  bool is_hermitian(double tol = 1e-12) const {
    const auto d = (*this - adjoint()).simplified(tol);
    return d.empty();
  }

  // Coefficients real after simplification.
  bool has_real_coefficients(double tol = 1e-12) const {
    for (const auto& t : simplified().terms_)
      if (std::abs(t.coef.imag()) > tol) return false;
    return true;
  }

  // out += (*this) * in over a register of any width >= n_qubits.
  void apply_add(std::span<const cplx> in, std::span<cplx> out) const {
    const u64 dim = in.size();
    for (const auto& t : terms_) {
      const cplx base = t.coef * ipow(popcount(t.word.x & t.word.z));
      const u64 x = t.word.x, z = t.word.z;
      for (u64 b = 0; b < dim; ++b) {
        const cplx a = in[b];
        if (a == cplx{}) continue;
        out[b ^ x] += (popcount(b & z) & 1) ? -base * a : base * a;
      }
    }
  }

  std::vector<cplx> apply(std::span<const cplx> in) const {
    std::vector<cplx> out(in.size());
    apply_add(in, out);
    return out;
  }

  std::string str() const {
    std::string s;
    for (const auto& t : terms_) {
      s += "(" + std::to_string(t.coef.real()) + "," + std::to_string(t.coef.imag()) + ") " +
           t.word.str(n_) + "\n";
    }
    return s;
  }

 private:
  int n_ = 0;
  std::vector<PauliTerm> terms_;
};

inline PauliSum commutator(const PauliSum& a, const PauliSum& b) {
  return (a * b - b * a).simplified(1e-12);
}

// Single-qubit ladder operators in Pauli form; sigma_minus raises occupation |0> -> |1>.
inline PauliSum sigma_minus(int n, int q) {
  return PauliSum::single(n, q, 'X', 0.5) + PauliSum::single(n, q, 'Y', cplx{0, -0.5});
}
inline PauliSum sigma_plus(int n, int q) {
  return PauliSum::single(n, q, 'X', 0.5) + PauliSum::single(n, q, 'Y', cplx{0, 0.5});
}
inline PauliSum number_op(int n, int q) {
  return PauliSum::identity(n, 0.5) + PauliSum::single(n, q, 'Z', -0.5);
}

}  // namespace z2h
