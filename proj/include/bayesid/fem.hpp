#pragma once

#include "bayesid/fem/diffusion.hpp"
#include "bayesid/fem/measurement.hpp"
#include "bayesid/fem/mesh.hpp"
#include "bayesid/fem/problem.hpp"
