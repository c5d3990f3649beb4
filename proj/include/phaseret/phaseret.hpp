#pragma once

#include "phaseret/bench.hpp"
#include "phaseret/engine1d.hpp"
#include "phaseret/engine2d.hpp"
#include "phaseret/error.hpp"
#include "phaseret/io.hpp"
#include "phaseret/oracle.hpp"
#include "phaseret/recursion.hpp"
#include "phaseret/residual.hpp"
#include "phaseret/spectral.hpp"
#include "phaseret/triangle.hpp"
