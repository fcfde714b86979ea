#pragma once

#include "btainla/bta.hpp"
#include "btainla/bta_io.hpp"
#include "btainla/dense.hpp"
#include "btainla/inla/marginals.hpp"
#include "btainla/inla/objective.hpp"
#include "btainla/inla/optimize.hpp"
#include "btainla/inla/pipeline.hpp"
#include "btainla/io.hpp"
#include "btainla/model.hpp"
#include "btainla/orchestrator.hpp"
#include "btainla/simgen.hpp"
