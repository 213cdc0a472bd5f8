#pragma once

#include "bayesid/update/enkf.hpp"
#include "bayesid/update/gain.hpp"
#include "bayesid/update/metrics.hpp"
#include "bayesid/update/pce_update.hpp"
#include "bayesid/update/sequential.hpp"
