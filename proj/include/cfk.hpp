#pragma once

#include "cfk/cli.hpp"
#include "cfk/config.hpp"
#include "cfk/errors.hpp"
#include "cfk/estimates.hpp"
#include "cfk/forms.hpp"
#include "cfk/geometry.hpp"
#include "cfk/kernel.hpp"
#include "cfk/parallel.hpp"
#include "cfk/probes.hpp"
#include "cfk/quadrature.hpp"
#include "cfk/random.hpp"
#include "cfk/report.hpp"
#include "cfk/support.hpp"
#include "cfk/types.hpp"
