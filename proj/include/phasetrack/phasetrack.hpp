#pragma once

// Umbrella header.

#include "phasetrack/angles.hpp"
#include "phasetrack/bayes_filter.hpp"
#include "phasetrack/beam.hpp"
#include "phasetrack/config.hpp"
#include "phasetrack/csv.hpp"
#include "phasetrack/ensemble.hpp"
#include "phasetrack/error.hpp"
#include "phasetrack/holevo.hpp"
#include "phasetrack/jet.hpp"
#include "phasetrack/linear_filter.hpp"
#include "phasetrack/optimize.hpp"
#include "phasetrack/rng.hpp"
#include "phasetrack/sde.hpp"
#include "phasetrack/theory.hpp"
