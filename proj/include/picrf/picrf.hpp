#pragma once

#include "picrf/corpus.hpp"
#include "picrf/error.hpp"
#include "picrf/eval.hpp"
#include "picrf/features.hpp"
#include "picrf/induction.hpp"
#include "picrf/lattice.hpp"
#include "picrf/lbfgs.hpp"
#include "picrf/model_io.hpp"
#include "picrf/objective.hpp"
#include "picrf/state_space.hpp"
#include "picrf/synthetic.hpp"
#include "picrf/training.hpp"
