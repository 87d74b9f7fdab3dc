#pragma once

#include "hsieval/clustering.hpp"
#include "hsieval/core.hpp"
#include "hsieval/error.hpp"
#include "hsieval/groundtruth.hpp"
#include "hsieval/pipeline.hpp"
#include "hsieval/raster_io.hpp"
#include "hsieval/validity.hpp"
