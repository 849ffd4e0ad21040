#pragma once

// Umbrella header.

#include "langevin/counterexample.hpp"
#include "langevin/error.hpp"
#include "langevin/gauss_paths.hpp"
#include "langevin/impact.hpp"
#include "langevin/recovery.hpp"
#include "langevin/rng.hpp"
#include "langevin/skorohod.hpp"
#include "langevin/stat_tests.hpp"
