#pragma once

#include "mvr/core.hpp"
#include "mvr/rng.hpp"
#include "mvr/geometry/kernel.hpp"
#include "mvr/geometry/transform.hpp"
#include "mvr/geometry/warp.hpp"
#include "mvr/operators/linear_operator.hpp"
#include "mvr/operators/sensing.hpp"
#include "mvr/operators/stacked.hpp"
#include "mvr/priors/huber.hpp"
#include "mvr/priors/prior.hpp"
#include "mvr/priors/tv.hpp"
#include "mvr/priors/wavelet.hpp"
#include "mvr/solver/algorithm.hpp"
#include "mvr/solver/auto_kappa.hpp"
#include "mvr/solver/baselines.hpp"
#include "mvr/solver/box_qp.hpp"
#include "mvr/metrics/metrics.hpp"
#include "mvr/harness/config_file.hpp"
#include "mvr/harness/experiment.hpp"
#include "mvr/harness/pgm.hpp"
#include "mvr/harness/scene.hpp"
