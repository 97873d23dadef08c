#pragma once

// Umbrella header for the dqpt library.

#include "dqpt/errors.hpp"
#include "dqpt/parallel.hpp"
#include "dqpt/numerics.hpp"
#include "dqpt/membrane.hpp"
#include "dqpt/spectrum.hpp"
#include "dqpt/dynamics.hpp"
#include "dqpt/fisher.hpp"
#include "dqpt/scaling.hpp"
#include "dqpt/io.hpp"
