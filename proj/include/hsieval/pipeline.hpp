#pragma once

#include "hsieval/pipeline/config.hpp"
#include "hsieval/pipeline/report.hpp"
#include "hsieval/pipeline/run.hpp"
#include "hsieval/pipeline/synthetic.hpp"
