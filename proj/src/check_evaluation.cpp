// Compiles covmap/evaluation.hpp on its own: every public header must be self-contained.
#include "covmap/evaluation.hpp"
