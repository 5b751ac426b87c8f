#pragma once

#include "z2h/types.hpp"
#include "z2h/pauli.hpp"
#include "z2h/model.hpp"
#include "z2h/ed.hpp"
#include "z2h/ansatz.hpp"
#include "z2h/simulator.hpp"
#include "z2h/circuits.hpp"
#include "z2h/vqe.hpp"
#include "z2h/analysis.hpp"
