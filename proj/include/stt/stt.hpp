#pragma once

// Umbrella header for the full toolkit. The numeric core (everything except
// scenario parsing, trace files, monitors, and plotting) has no dependency on
// the bundled JSON library; include the individual headers to stay lean.

#include "stt/controller.hpp"
#include "stt/integrate.hpp"
#include "stt/monitors.hpp"
#include "stt/numerics.hpp"
#include "stt/plants.hpp"
#include "stt/plot.hpp"
#include "stt/scenario.hpp"
#include "stt/sif.hpp"
#include "stt/sim.hpp"
#include "stt/trace_io.hpp"
#include "stt/tube.hpp"
#include "stt/types.hpp"
#include "stt/vec.hpp"
#include "stt/version.hpp"
