#pragma once

#include "survq/dataset.hpp"
#include "survq/density.hpp"
#include "survq/error.hpp"
#include "survq/matrix.hpp"
#include "survq/power.hpp"
#include "survq/quantile_tests.hpp"
#include "survq/rng.hpp"
#include "survq/scenario.hpp"
#include "survq/simulation.hpp"
#include "survq/special_functions.hpp"
#include "survq/survival.hpp"

namespace survq {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace survq
