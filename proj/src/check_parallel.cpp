// Compiles covmap/parallel.hpp on its own: every public header must be self-contained.
#include "covmap/parallel.hpp"
