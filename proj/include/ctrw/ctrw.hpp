#pragma once

// Umbrella header for the whole library.

#include "ctrw/error.hpp"
#include "ctrw/frac_calc.hpp"
#include "ctrw/rng.hpp"
#include "ctrw/laws.hpp"
#include "ctrw/grid.hpp"
#include "ctrw/model.hpp"
#include "ctrw/ctrw_sim.hpp"
#include "ctrw/dp_solver.hpp"
#include "ctrw/fhjb_solver.hpp"
#include "ctrw/convergence.hpp"
#include "ctrw/config.hpp"
