#pragma once

#include "risel/beamforming.hpp"
#include "risel/errors.hpp"
#include "risel/io.hpp"
#include "risel/linalg.hpp"
#include "risel/metrics.hpp"
#include "risel/orchestrator.hpp"
#include "risel/phase_admm.hpp"
#include "risel/power_sca.hpp"
#include "risel/rng.hpp"
#include "risel/scenario.hpp"
