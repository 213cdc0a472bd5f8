#pragma once

#include "bayesid/randfield/kle.hpp"
#include "bayesid/randfield/lognormal.hpp"
