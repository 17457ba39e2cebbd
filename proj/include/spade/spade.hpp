#pragma once

#include "spade/basis.hpp"
#include "spade/cli_support.hpp"
#include "spade/errors.hpp"
#include "spade/fisher.hpp"
#include "spade/grid.hpp"
#include "spade/montecarlo.hpp"
#include "spade/povm.hpp"
#include "spade/psf.hpp"
#include "spade/version.hpp"
