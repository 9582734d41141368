// Compiles covmap/synthgen.hpp on its own: every public header must be self-contained.
#include "covmap/synthgen.hpp"
