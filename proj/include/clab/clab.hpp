#pragma once

#include "clab/core.hpp"
#include "clab/rng.hpp"
#include "clab/dataset.hpp"
#include "clab/kmeans.hpp"
#include "clab/kstar.hpp"
#include "clab/em.hpp"
#include "clab/metrics.hpp"
#include "clab/synthetic.hpp"
#include "clab/bench.hpp"
