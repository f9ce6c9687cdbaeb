#pragma once

#include "meshnoc/bench.hpp"
#include "meshnoc/cannon.hpp"
#include "meshnoc/config.hpp"
#include "meshnoc/errors.hpp"
#include "meshnoc/host.hpp"
#include "meshnoc/mesh.hpp"
#include "meshnoc/perf.hpp"
#include "meshnoc/shmem.hpp"
#include "meshnoc/stats.hpp"
#include "meshnoc/trace.hpp"
