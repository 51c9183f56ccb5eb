#pragma once

#include "volmf/distributions.hpp"
#include "volmf/error.hpp"
#include "volmf/ingest.hpp"
#include "volmf/io.hpp"
#include "volmf/measures.hpp"
#include "volmf/mfdfa.hpp"
#include "volmf/numerics.hpp"
#include "volmf/optimize.hpp"
#include "volmf/rng.hpp"
#include "volmf/rolling.hpp"
#include "volmf/stats.hpp"
#include "volmf/synth.hpp"
#include "volmf/tgarch.hpp"

namespace volmf {
inline constexpr const char* kVersion = "0.1.0";
}
