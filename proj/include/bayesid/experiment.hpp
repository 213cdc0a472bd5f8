#pragma once

#include "bayesid/experiment/compare.hpp"
#include "bayesid/experiment/config.hpp"
#include "bayesid/experiment/problems.hpp"
#include "bayesid/experiment/runner.hpp"
