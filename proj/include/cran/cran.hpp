#pragma once

#include "cran/core/random.hpp"
#include "cran/core/types.hpp"
#include "cran/core/units.hpp"
#include "cran/eval/evaluator.hpp"
#include "cran/experiment/config.hpp"
#include "cran/experiment/runner.hpp"
#include "cran/mm/mm_loop.hpp"
#include "cran/recovery/beam_solution.hpp"
#include "cran/recovery/rank_recovery.hpp"
#include "cran/robust/robust_problem.hpp"
#include "cran/scenario/scenario.hpp"
#include "cran/scenario/serialize.hpp"
#include "cran/sdp/embedding.hpp"
#include "cran/sdp/problem.hpp"
#include "cran/sdp/sdpa_format.hpp"
#include "cran/sdp/solver.hpp"
#include "cran/sdp/verify.hpp"
