#pragma once
// Everything except the WebSocket server (sync_server.hpp needs Boost).

#include "sarw/error.hpp"
#include "sarw/geometry.hpp"
#include "sarw/grid.hpp"
#include "sarw/interaction.hpp"
#include "sarw/mesh.hpp"
#include "sarw/mesh_io.hpp"
#include "sarw/perception.hpp"
#include "sarw/planner.hpp"
#include "sarw/protocol.hpp"
#include "sarw/rng.hpp"
#include "sarw/scenario.hpp"
#include "sarw/sim.hpp"
#include "sarw/vpt.hpp"
#include "sarw/workspace.hpp"
