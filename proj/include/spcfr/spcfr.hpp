#pragma once

#include "spcfr/errors.hpp"
#include "spcfr/treeplex.hpp"
#include "spcfr/efg.hpp"
#include "spcfr/game.hpp"
#include "spcfr/builders.hpp"
#include "spcfr/game_io.hpp"
#include "spcfr/local_rm.hpp"
#include "spcfr/stability.hpp"
#include "spcfr/cfr.hpp"
#include "spcfr/metrics.hpp"
#include "spcfr/solver.hpp"
#include "spcfr/trace_csv.hpp"
#include "spcfr/checks.hpp"
