#pragma once

// Umbrella header for the predictive sequential-testing library.

#include "predq/confseq.hpp"
#include "predq/core.hpp"
#include "predq/eprocess.hpp"
#include "predq/families.hpp"
#include "predq/futility.hpp"
#include "predq/gaussian.hpp"
#include "predq/mc.hpp"
#include "predq/nonparam.hpp"
#include "predq/normal.hpp"
#include "predq/rng.hpp"
#include "predq/sim.hpp"
#include "predq/survival_sim.hpp"
