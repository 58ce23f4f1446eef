#pragma once

#include "mskp/convex_sets.hpp"
#include "mskp/operators.hpp"
#include "mskp/path_csv.hpp"
#include "mskp/paths.hpp"
#include "mskp/penalized.hpp"
#include "mskp/projections.hpp"
#include "mskp/scenario.hpp"
#include "mskp/skorokhod.hpp"
#include "mskp/verify.hpp"
