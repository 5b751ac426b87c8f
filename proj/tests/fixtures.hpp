#pragma once

#include "config.hpp"
#include "z2h/z2h.hpp"

namespace fixtures {

// Published order-1 alphas at N_P = 5, m_f = 1, eps = -0.3 (label -> alpha0, alpha1).
inline z2h::AnsatzParams published_alphas() {
  z2h::AnsatzParams ap(1);
  const double rows[5][3] = {
      {-2, -1.5139, -1.4590}, {-1, -1.0565, -1.0013}, {0, -0.0957, 1.1112}, {1, -3.2695, -3.0880}, {2, -1.7754, 1.1020}};
  for (const auto& r : rows) {
    ap.set(static_cast<int>(r[0]), 1, 0, r[1]);
    ap.set(static_cast<int>(r[0]), 1, 1, r[2]);
  }
  return ap;
}

// Two-angle optimum of the even/odd Q_GS layer at N_P = 5.
inline z2h::GroundStateAngles even_odd_angles() { return {0.17016, 0.78538}; }

// Two packets at N_P = 5 with a shared ancilla, one Theta split and cutoff 0.1.
inline z2h::app::RunConfig shared_ancilla_config() {
  auto c = z2h::app::default_config();
  c.alphas = published_alphas();
  c.ground = even_odd_angles();
  return c;
}

// Same packets with one ancilla each, ten splits and no cutoff.
inline z2h::app::RunConfig two_ancilla_config() {
  auto c = shared_ancilla_config();
  c.scheme.ancillas = 2;
  c.scheme.wp_trotter_steps = 10;
  c.scheme.theta_cutoff = 0.0;
  return c;
}

}  // namespace fixtures
