#pragma once

#include "adaptk/adaptive_k.hpp"
#include "adaptk/core.hpp"
#include "adaptk/curvature.hpp"
#include "adaptk/embedding.hpp"
#include "adaptk/error.hpp"
#include "adaptk/evaluation.hpp"
#include "adaptk/isomap.hpp"
#include "adaptk/lle.hpp"
#include "adaptk/neighbors.hpp"
#include "adaptk/parallel.hpp"
#include "adaptk/pipeline.hpp"
