#pragma once

#include "covmap/geometry.hpp"
#include "covmap/measurements.hpp"
#include "covmap/ocsvm.hpp"
#include "covmap/boundary.hpp"
#include "covmap/evaluation.hpp"
#include "covmap/synthgen.hpp"
#include "covmap/parallel.hpp"
