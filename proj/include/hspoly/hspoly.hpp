#pragma once

#include "hspoly/basis.hpp"
#include "hspoly/config.hpp"
#include "hspoly/csv.hpp"
#include "hspoly/data.hpp"
#include "hspoly/errors.hpp"
#include "hspoly/experiment.hpp"
#include "hspoly/kernel.hpp"
#include "hspoly/lasso.hpp"
#include "hspoly/methods.hpp"
#include "hspoly/ranking.hpp"
#include "hspoly/rng.hpp"
#include "hspoly/solver.hpp"
#include "hspoly/types.hpp"
#include "hspoly/version.hpp"
