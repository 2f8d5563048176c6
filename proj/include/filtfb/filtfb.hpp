#pragma once

#include "filtfb/analytics.hpp"
#include "filtfb/csv.hpp"
#include "filtfb/errors.hpp"
#include "filtfb/filters.hpp"
#include "filtfb/moment_systems.hpp"
#include "filtfb/numerics/integrate.hpp"
#include "filtfb/numerics/linalg.hpp"
#include "filtfb/numerics/matrix.hpp"
#include "filtfb/numerics/noise.hpp"
#include "filtfb/phase_diagram.hpp"
#include "filtfb/protocol.hpp"
#include "filtfb/trajectory/engine.hpp"
#include "filtfb/trajectory/quantum.hpp"
