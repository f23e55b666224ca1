#pragma once

#include "madet/candidates.hpp"
#include "madet/convergence.hpp"
#include "madet/csv.hpp"
#include "madet/ensemble.hpp"
#include "madet/evaluate.hpp"
#include "madet/features.hpp"
#include "madet/field.hpp"
#include "madet/fov.hpp"
#include "madet/gradient.hpp"
#include "madet/labeling.hpp"
#include "madet/pipeline.hpp"
#include "madet/preprocess.hpp"
#include "madet/raster_io.hpp"
#include "madet/regionprops.hpp"
#include "madet/synthetic.hpp"
#include "madet/util.hpp"
