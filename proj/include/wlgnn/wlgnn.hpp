#pragma once

// Umbrella header.

#include "wlgnn/adam.hpp"
#include "wlgnn/checkpoint.hpp"
#include "wlgnn/error.hpp"
#include "wlgnn/gnn.hpp"
#include "wlgnn/graph.hpp"
#include "wlgnn/matrix.hpp"
#include "wlgnn/metrics.hpp"
#include "wlgnn/mlp.hpp"
#include "wlgnn/model.hpp"
#include "wlgnn/pairs.hpp"
#include "wlgnn/random.hpp"
#include "wlgnn/train.hpp"
#include "wlgnn/tuples.hpp"
#include "wlgnn/wl.hpp"
