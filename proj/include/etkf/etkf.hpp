#pragma once

// Umbrella header for the event-triggered consensus estimation library.

#include "etkf/consensus.hpp"
#include "etkf/errors.hpp"
#include "etkf/estimator.hpp"
#include "etkf/graph.hpp"
#include "etkf/netsim.hpp"
#include "etkf/scenario.hpp"
#include "etkf/scenario_json.hpp"
#include "etkf/sod.hpp"
#include "etkf/trace.hpp"
