#pragma once

// Umbrella header for the broken-ray tomography toolkit.

#include "brt/field.hpp"
#include "brt/geometry.hpp"
#include "brt/harness.hpp"
#include "brt/io.hpp"
#include "brt/linsys.hpp"
#include "brt/rays.hpp"
