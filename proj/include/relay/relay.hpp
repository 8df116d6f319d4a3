#pragma once

#include "relay/errors.hpp"
#include "relay/sysmat.hpp"
#include "relay/lifting.hpp"
#include "relay/pulse.hpp"
#include "relay/plant.hpp"
#include "relay/dare.hpp"
#include "relay/hinf.hpp"
#include "relay/sim.hpp"
#include "relay/text.hpp"
#include "relay/config.hpp"
#include "relay/artifact.hpp"
#include "relay/commands.hpp"
