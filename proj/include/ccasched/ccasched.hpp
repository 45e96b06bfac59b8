#pragma once

// Umbrella header: EDP-aware tuning of parallel regions on a composite-core
// machine — configuration space, measurement datasets, feature engineering,
// five from-scratch regressors, the predict-then-argmin scheduler, and the
// cost/accuracy trade-off report.

#include "config_space.hpp"
#include "csv.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "hpc.hpp"
#include "models/common.hpp"
#include "models/linear.hpp"
#include "models/lms.hpp"
#include "models/m5tree.hpp"
#include "models/mlp.hpp"
#include "models/predictor.hpp"
#include "models/reptree.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "scheduler.hpp"
#include "synthetic.hpp"
#include "tradeoff.hpp"
