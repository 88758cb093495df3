#pragma once

#include "storctl/decomposition.hpp"
#include "storctl/distribution.hpp"
#include "storctl/error.hpp"
#include "storctl/evaluation.hpp"
#include "storctl/gmm.hpp"
#include "storctl/heuristics.hpp"
#include "storctl/hourly_trace.hpp"
#include "storctl/numeric.hpp"
#include "storctl/policy.hpp"
#include "storctl/sizing.hpp"
