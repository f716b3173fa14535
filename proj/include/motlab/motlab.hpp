#pragma once

// Umbrella header for the motlab library: discrete martingale optimal
// transport on the real line, with convex-order tooling, adapted
// Wasserstein distances and marginal-stability experiments.

#include "motlab/adapted.hpp"
#include "motlab/costexpr.hpp"
#include "motlab/errors.hpp"
#include "motlab/json_io.hpp"
#include "motlab/lp.hpp"
#include "motlab/measures.hpp"
#include "motlab/mot.hpp"
#include "motlab/numeric.hpp"
#include "motlab/stability.hpp"
