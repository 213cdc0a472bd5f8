#pragma once

#include "bayesid/polychaos/hermite.hpp"
#include "bayesid/polychaos/multi_index.hpp"
#include "bayesid/polychaos/pce.hpp"
#include "bayesid/polychaos/pce_json.hpp"
#include "bayesid/polychaos/quadrature.hpp"
