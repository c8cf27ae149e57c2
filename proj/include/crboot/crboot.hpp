#pragma once

#include "crboot/numeric.hpp"
#include "crboot/step_curve.hpp"
#include "crboot/event_data.hpp"
#include "crboot/estimators.hpp"
#include "crboot/multipliers.hpp"
#include "crboot/resampling.hpp"
#include "crboot/parallel.hpp"
#include "crboot/bands.hpp"
#include "crboot/simulation.hpp"
#include "crboot/io.hpp"

namespace crboot {
inline constexpr const char* kVersion = "0.1.0";
}
