// Compiles covmap/geometry.hpp on its own: every public header must be self-contained.
#include "covmap/geometry.hpp"
