#pragma once

#include "lowlight/alloc_tracker.hpp"
#include "lowlight/apa.hpp"
#include "lowlight/checkpoint.hpp"
#include "lowlight/color.hpp"
#include "lowlight/config.hpp"
#include "lowlight/curve.hpp"
#include "lowlight/curve_net.hpp"
#include "lowlight/eei.hpp"
#include "lowlight/image.hpp"
#include "lowlight/image_io.hpp"
#include "lowlight/losses.hpp"
#include "lowlight/optim.hpp"
#include "lowlight/parallel.hpp"
#include "lowlight/patches.hpp"
#include "lowlight/profiling.hpp"
#include "lowlight/stats.hpp"
#include "lowlight/train.hpp"
