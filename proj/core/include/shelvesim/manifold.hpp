#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace shelvesim {

// Level manifolds tracked by the rate model, one ion. LOST marks an ion
// absent from the trap (background-gas collision); it is absorbing and
// scatters no photons. Hyperfine structure is resolved only where a rate
// in the model distinguishes it.
enum class Manifold : int {
  S_F0 = 0,   // 2S1/2 F=0, qubit |0>
  S_F1,       // 2S1/2 F=1, qubit |1>
  D52,        // 2D5/2, reached by the 411 nm drive
  D32_F1,     // 2D3/2 F=1, repumped by 935 nm
  D32_F2,     // 2D3/2 F=2, dark to 935 nm (needs 861 nm)
  F72,        // 2F7/2, long-lived shelf below D5/2
  LOST,
};

inline constexpr int kManifoldCount = 7;

// Cooling fluorescence: only the ground S manifolds scatter 370 nm light.
constexpr bool fluoresces(Manifold m) {
  return m == Manifold::S_F0 || m == Manifold::S_F1;
}

constexpr bool is_shelved(Manifold m) {
  return m == Manifold::D52 || m == Manifold::F72;
}

std::string_view to_string(Manifold m);
std::optional<Manifold> manifold_from_string(std::string_view name);

inline constexpr std::array<Manifold, kManifoldCount> all_manifolds() {
  return {Manifold::S_F0, Manifold::S_F1, Manifold::D52,   Manifold::D32_F1,
          Manifold::D32_F2, Manifold::F72, Manifold::LOST};
}

}  // namespace shelvesim
