// Compiles covmap/ocsvm.hpp on its own: every public header must be self-contained.
#include "covmap/ocsvm.hpp"
