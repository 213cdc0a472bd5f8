#pragma once

#include "bayesid/mcmc/density.hpp"
#include "bayesid/mcmc/likelihood.hpp"
#include "bayesid/mcmc/metropolis.hpp"
#include "bayesid/mcmc/study.hpp"
