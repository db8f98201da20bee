#pragma once

#include "dygauss/specfun.hpp"
#include "dygauss/simplex.hpp"
#include "dygauss/parametrization.hpp"
#include "dygauss/posterior.hpp"
#include "dygauss/random.hpp"
#include "dygauss/baselines.hpp"
#include "dygauss/select.hpp"
#include "dygauss/eval.hpp"
#include "dygauss/io.hpp"
#include "dygauss/pool.hpp"
#include "dygauss/simulation.hpp"
#include "dygauss/workflow.hpp"
