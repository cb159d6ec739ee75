#pragma once

#include "qpop/abm.hpp"
#include "qpop/cem.hpp"
#include "qpop/dists.hpp"
#include "qpop/errors.hpp"
#include "qpop/explore.hpp"
#include "qpop/games.hpp"
#include "qpop/odes.hpp"
#include "qpop/random.hpp"
#include "qpop/rem.hpp"
#include "qpop/rk4.hpp"
#include "qpop/trajectory.hpp"
