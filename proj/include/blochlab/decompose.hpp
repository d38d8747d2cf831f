// decompose.hpp — splitting a symbol into six spectral regions relative to an
// energy shell of radius ρ:
//
//   high        |θ| > r, no ξ-restriction        (frequencies outside the set Θ_r)
//   mean        θ = 0                            (the x-average)
//   and for 0 < |θ| ≤ r:
//   below       ℓ<_θ       energies well below the shell
//   above       ℓ>_θ       energies well above the shell
//   resonant    e_θ·ζ_θ    in-shell, θ·(ξ+θ/2) within the window L = ρ^β
//   nonresonant e_θ·φ_θ    in-shell, outside that window
//
// The filters form an exact partition of unity, so the six parts sum back to
// the original symbol pointwise.  On the supports of the in-shell parts
// ρ/2 ≤ |ξ+θ/2| ≤ 3ρ/2.

#pragma once

#include "blochlab/symbol.hpp"

namespace blochlab {

struct SymbolParts {
  Symbol mean, below, resonant, nonresonant, above, high;

  std::array<Symbol, 6> all() const { return {mean, below, resonant, nonresonant, above, high}; }

  // Sum of all six parts — equals the original symbol identically.
  Symbol reconstruct() const {
    return symbol_sum({mean, below, resonant, nonresonant, above, high});
  }
};

inline SymbolParts decompose(const Symbol& b, const CutoffParams& cut) {
  SymbolParts p;
  p.mean = filter_part(b, PartKind::Mean, cut);
  p.below = filter_part(b, PartKind::BelowShell, cut);
  p.resonant = filter_part(b, PartKind::Resonant, cut);
  p.nonresonant = filter_part(b, PartKind::NonResonant, cut);
  p.above = filter_part(b, PartKind::AboveShell, cut);
  p.high = filter_part(b, PartKind::HighFrequency, cut);
  return p;
}

// Resonant part restricted to frequencies inside a subspace V.
inline Symbol resonant_part_V(const Symbol& b, const CutoffParams& cut, const Subspace& V) {
  return filter_part(b, PartKind::Resonant, cut, V);
}

}  // namespace blochlab
