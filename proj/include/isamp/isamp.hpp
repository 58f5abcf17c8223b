#pragma once

// Umbrella header.

#include "isamp/types.hpp"
#include "isamp/density.hpp"
#include "isamp/likelihood.hpp"
#include "isamp/quadrature.hpp"
#include "isamp/splines.hpp"
#include "isamp/model.hpp"
#include "isamp/rng.hpp"
#include "isamp/sampler.hpp"
#include "isamp/designs.hpp"
#include "isamp/harness.hpp"
#include "isamp/io.hpp"
#include "isamp/cli.hpp"
