#pragma once

#include "torusflow/closure.hpp"
#include "torusflow/constants.hpp"
#include "torusflow/counting.hpp"
#include "torusflow/integer_matrix.hpp"
#include "torusflow/lattice.hpp"
#include "torusflow/lds.hpp"
#include "torusflow/lll.hpp"
#include "torusflow/parallel.hpp"
#include "torusflow/param_set.hpp"
#include "torusflow/scenario.hpp"
#include "torusflow/special.hpp"
#include "torusflow/subtorus.hpp"
#include "torusflow/torus.hpp"
