// Compiles covmap/boundary.hpp on its own: every public header must be self-contained.
#include "covmap/boundary.hpp"
