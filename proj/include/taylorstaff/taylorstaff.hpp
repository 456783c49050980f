#pragma once

#include "taylorstaff/analytics.hpp"
#include "taylorstaff/arrivals.hpp"
#include "taylorstaff/errors.hpp"
#include "taylorstaff/estimation.hpp"
#include "taylorstaff/experiments.hpp"
#include "taylorstaff/intensity.hpp"
#include "taylorstaff/io.hpp"
#include "taylorstaff/optimize.hpp"
#include "taylorstaff/queue_sim.hpp"
#include "taylorstaff/rng.hpp"
#include "taylorstaff/service.hpp"
#include "taylorstaff/staffing.hpp"
