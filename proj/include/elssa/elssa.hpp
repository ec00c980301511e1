#pragma once

#include "elssa/core.hpp"
#include "elssa/elproc.hpp"
#include "elssa/esprit.hpp"
#include "elssa/hankel.hpp"
#include "elssa/io.hpp"
#include "elssa/lanczos.hpp"
#include "elssa/model.hpp"
#include "elssa/rng.hpp"
#include "elssa/ssa.hpp"
#include "elssa/synth.hpp"
