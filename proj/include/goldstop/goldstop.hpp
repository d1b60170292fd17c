#pragma once

#include "goldstop/errors.hpp"
#include "goldstop/quadrature.hpp"
#include "goldstop/roots.hpp"
#include "goldstop/ode.hpp"
#include "goldstop/diffusion.hpp"
#include "goldstop/boundary.hpp"
#include "goldstop/boundary_ode.hpp"
#include "goldstop/bessel.hpp"
#include "goldstop/rng.hpp"
#include "goldstop/stats.hpp"
#include "goldstop/simulator.hpp"
#include "goldstop/cev.hpp"
#include "goldstop/io.hpp"
