#pragma once

#include "vaot/align.hpp"
#include "vaot/config.hpp"
#include "vaot/encoder.hpp"
#include "vaot/error.hpp"
#include "vaot/evaluate.hpp"
#include "vaot/io/csv.hpp"
#include "vaot/io/dataset_io.hpp"
#include "vaot/io/key_value.hpp"
#include "vaot/metrics.hpp"
#include "vaot/ot/fgw_solver.hpp"
#include "vaot/ot/objectives.hpp"
#include "vaot/ot/problem.hpp"
#include "vaot/ot/sinkhorn.hpp"
#include "vaot/ot/structural_prior.hpp"
#include "vaot/priors.hpp"
#include "vaot/segment.hpp"
#include "vaot/synth.hpp"
#include "vaot/train.hpp"
#include "vaot/types.hpp"
