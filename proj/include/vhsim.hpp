#pragma once

#include "vhsim/compare.hpp"
#include "vhsim/errors.hpp"
#include "vhsim/handover.hpp"
#include "vhsim/kernel.hpp"
#include "vhsim/metrics.hpp"
#include "vhsim/mobility.hpp"
#include "vhsim/net/link.hpp"
#include "vhsim/net/segment.hpp"
#include "vhsim/net/topology.hpp"
#include "vhsim/scenario.hpp"
#include "vhsim/sim_time.hpp"
#include "vhsim/simulation.hpp"
#include "vhsim/tcp/receiver.hpp"
#include "vhsim/tcp/sender.hpp"
#include "vhsim/trace.hpp"
