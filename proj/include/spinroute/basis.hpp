#pragma once
// Single-excitation basis over a set of six-level Rydberg atoms (two S_1/2
// and four P_3/2 magnetic sublevels each): all assignments with exactly one
// atom in its upper (P) manifold and every other atom in one of its two
// lower (S) sublevels.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "atomic.hpp"
#include "species.hpp"

namespace spinroute {

// One atom participating in the exchange dynamics, with its designated
// working sublevels (|0>/|1> for main atoms, |->/|+> for auxiliary atoms).
struct SixLevelAtom {
  SpeciesParams species;
  int n = 0;
  int designated_low = 0;    // 0 = (S, m=-1/2), 1 = (S, m=+1/2)
  int designated_upper = 0;  // 0..3 = (P3/2, m = -3/2, -1/2, +1/2, +3/2)
};

inline SixLevelAtom main_atom(SpeciesParams sp, int n) {
  return {std::move(sp), n, 0, 2};  // |0> = S,-1/2 ; |1> = P,+1/2
}
inline SixLevelAtom aux_atom(SpeciesParams sp, int n) {
  return {std::move(sp), n, 1, 1};  // |-> = S,+1/2 ; |+> = P,-1/2
}

// The six sublevels in basis order: S(-1/2), S(+1/2), P(-3/2), P(-1/2),
// P(+1/2), P(+3/2). Upper-sublevel index u in 0..3 maps to level 2 + u.
inline std::vector<AtomLevel> six_levels(int n) {
  return {{n, 0, 1, -1}, {n, 0, 1, +1}, {n, 1, 3, -3},
          {n, 1, 3, -1}, {n, 1, 3, +1}, {n, 1, 3, +3}};
}

// Decoded basis state: which atom is excited, in which P sublevel, and the
// S sublevel (0/1) of every other atom in atom order.
struct BasisState {
  int excited = 0;
  int upper = 0;           // 0..3
  std::vector<int> lows;   // one entry per non-excited atom, atom order
};

// Deterministic ordering: excited-atom index major, upper sublevel next,
// lower configurations lexicographic (first listed spectator atom is the
// most significant bit). For A atoms the dimension is A * 4 * 2^(A-1).
class MultilevelBasis {
 public:
  explicit MultilevelBasis(std::vector<SixLevelAtom> atoms)
      : atoms_(std::move(atoms)) {
    if (atoms_.empty())
      throw std::invalid_argument("basis: at least one atom required");
    n_low_cfg_ = 1 << (atoms_.size() - 1);
  }

  int n_atoms() const { return static_cast<int>(atoms_.size()); }
  int size() const { return n_atoms() * 4 * n_low_cfg_; }
  const std::vector<SixLevelAtom>& atoms() const { return atoms_; }

  int index(int excited, int upper, unsigned low_bits) const {
    return (excited * 4 + upper) * n_low_cfg_ + static_cast<int>(low_bits);
  }

  BasisState state(int idx) const {
    if (idx < 0 || idx >= size())
      throw std::out_of_range("basis: state index out of range");
    BasisState s;
    const int cfg = idx % n_low_cfg_;
    const int rest = idx / n_low_cfg_;
    s.upper = rest % 4;
    s.excited = rest / 4;
    const int k = n_atoms() - 1;
    s.lows.resize(k);
    for (int i = 0; i < k; ++i) s.lows[i] = (cfg >> (k - 1 - i)) & 1;
    return s;
  }

  // Spectator atoms of `excited`, in atom order (parallel to lows).
  std::vector<int> others(int excited) const {
    std::vector<int> o;
    for (int a = 0; a < n_atoms(); ++a)
      if (a != excited) o.push_back(a);
    return o;
  }

  // The state with atom e excited in its designated upper sublevel and all
  // spectators in their designated lower sublevels.
  int designated_state(int excited) const {
    unsigned bits = 0;
    const int k = n_atoms() - 1;
    int slot = 0;
    for (int a = 0; a < n_atoms(); ++a) {
      if (a == excited) continue;
      bits |= static_cast<unsigned>(atoms_[a].designated_low) << (k - 1 - slot);
      ++slot;
    }
    return index(excited, atoms_[excited].designated_upper, bits);
  }

 private:
  std::vector<SixLevelAtom> atoms_;
  int n_low_cfg_ = 1;
};

}  // namespace spinroute
