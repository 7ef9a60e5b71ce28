#pragma once

#include "cellboard/battery.hpp"
#include "cellboard/contour.hpp"
#include "cellboard/energy.hpp"
#include "cellboard/enumerate.hpp"
#include "cellboard/errors.hpp"
#include "cellboard/exact.hpp"
#include "cellboard/geometry.hpp"
#include "cellboard/mc.hpp"
#include "cellboard/model.hpp"
#include "cellboard/parallel.hpp"
#include "cellboard/report.hpp"
#include "cellboard/rng.hpp"
#include "cellboard/spin_config.hpp"
#include "cellboard/stats.hpp"
#include "cellboard/transfer.hpp"
#include "cellboard/variants.hpp"
