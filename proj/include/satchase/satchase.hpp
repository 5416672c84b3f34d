#pragma once

#include "satchase/analysis.hpp"
#include "satchase/assign.hpp"
#include "satchase/bench.hpp"
#include "satchase/chase.hpp"
#include "satchase/core.hpp"
#include "satchase/egd.hpp"
#include "satchase/iso.hpp"
#include "satchase/parser.hpp"
