#pragma once

#include "bayesid/forward/bundle.hpp"
#include "bayesid/forward/galerkin.hpp"
#include "bayesid/forward/model.hpp"
#include "bayesid/forward/propagate.hpp"
