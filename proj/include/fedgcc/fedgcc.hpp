#pragma once

// Umbrella header for the FedGCC simulator library.

#include "fedgcc/aggregation.hpp"
#include "fedgcc/compression.hpp"
#include "fedgcc/config.hpp"
#include "fedgcc/data.hpp"
#include "fedgcc/fedcore.hpp"
#include "fedgcc/model.hpp"
#include "fedgcc/numerics.hpp"
#include "fedgcc/report.hpp"
#include "fedgcc/rng.hpp"
