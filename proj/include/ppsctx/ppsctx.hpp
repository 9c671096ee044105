#pragma once

#include "ppsctx/errors.hpp"
#include "ppsctx/linalg.hpp"
#include "ppsctx/random.hpp"
#include "ppsctx/measurement.hpp"
#include "ppsctx/paradox.hpp"
#include "ppsctx/contextuality.hpp"
#include "ppsctx/builtins.hpp"
#include "ppsctx/scenario_io.hpp"
#include "ppsctx/report.hpp"
