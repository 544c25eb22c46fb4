#pragma once

#include "eco/dbscan.hpp"
#include "eco/engine.hpp"
#include "eco/geometry.hpp"
#include "eco/grid_index.hpp"
#include "eco/io.hpp"
#include "eco/metrics.hpp"
#include "eco/minimal_groups.hpp"
#include "eco/smoothing.hpp"
#include "eco/snapshot.hpp"
