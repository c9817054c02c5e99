#pragma once

#include "rcseg/components.hpp"
#include "rcseg/connectivity.hpp"
#include "rcseg/contour.hpp"
#include "rcseg/energy.hpp"
#include "rcseg/initialize.hpp"
#include "rcseg/io.hpp"
#include "rcseg/job.hpp"
#include "rcseg/moves.hpp"
#include "rcseg/optimizer.hpp"
#include "rcseg/parallel.hpp"
#include "rcseg/raster.hpp"
#include "rcseg/region_stats.hpp"
#include "rcseg/sobolev.hpp"
#include "rcseg/synth.hpp"
#include "rcseg/topology.hpp"
