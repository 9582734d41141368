// Compiles covmap/measurements.hpp on its own: every public header must be self-contained.
#include "covmap/measurements.hpp"
