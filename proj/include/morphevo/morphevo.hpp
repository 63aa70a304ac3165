#pragma once

#include "archive.hpp"
#include "bodyplan.hpp"
#include "cmaes.hpp"
#include "common.hpp"
#include "controller.hpp"
#include "cppn.hpp"
#include "evo.hpp"
#include "experiment.hpp"
#include "metrics.hpp"
#include "nipes.hpp"
#include "sched.hpp"
#include "sim.hpp"
