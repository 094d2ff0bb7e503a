#pragma once

#include "scalebridge/active_learning.hpp"
#include "scalebridge/committee.hpp"
#include "scalebridge/core.hpp"
#include "scalebridge/datastore.hpp"
#include "scalebridge/experiments.hpp"
#include "scalebridge/md.hpp"
#include "scalebridge/metrics.hpp"
#include "scalebridge/mixing.hpp"
#include "scalebridge/mlp.hpp"
#include "scalebridge/nelder_mead.hpp"
#include "scalebridge/optimizer_sampling.hpp"
#include "scalebridge/orchestrator.hpp"
#include "scalebridge/rbf.hpp"
#include "scalebridge/run_config.hpp"
#include "scalebridge/sampling.hpp"
#include "scalebridge/sampling_ab.hpp"
#include "scalebridge/surrogate.hpp"
#include "scalebridge/truth_models.hpp"
#include "scalebridge/upscaler.hpp"
#include "scalebridge/validity.hpp"
#include "scalebridge/worker_pool.hpp"
