#pragma once

// Everything at once.

#include "framewarp/bench.hpp"
#include "framewarp/dtw.hpp"
#include "framewarp/errors.hpp"
#include "framewarp/eval.hpp"
#include "framewarp/features.hpp"
#include "framewarp/io.hpp"
#include "framewarp/isolated.hpp"
#include "framewarp/metaframe_distance.hpp"
#include "framewarp/model.hpp"
#include "framewarp/one_pass.hpp"
#include "framewarp/parallel.hpp"
#include "framewarp/rng.hpp"
#include "framewarp/synth.hpp"
#include "framewarp/templates.hpp"
#include "framewarp/two_pass.hpp"
#include "framewarp/types.hpp"
