#ifndef TORUS_CYCLES_TORUS_CYCLES_HPP
#define TORUS_CYCLES_TORUS_CYCLES_HPP

#include "torus_cycles/errors.hpp"
#include "torus_cycles/specfun.hpp"
#include "torus_cycles/geometry.hpp"
#include "torus_cycles/cycleprob.hpp"
#include "torus_cycles/precision.hpp"
#include "torus_cycles/spectral.hpp"
#include "torus_cycles/oracle.hpp"

#endif  // TORUS_CYCLES_TORUS_CYCLES_HPP
