#pragma once

// Umbrella header for the e-value / p-value toolkit.

#include "calibration.hpp"
#include "combination.hpp"
#include "core_space.hpp"
#include "datasplit.hpp"
#include "io.hpp"
#include "rng.hpp"
#include "testing.hpp"
#include "version.hpp"
