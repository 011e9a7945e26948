#pragma once

#include "dapper/actions.hpp"
#include "dapper/analysis.hpp"
#include "dapper/audit.hpp"
#include "dapper/baselines.hpp"
#include "dapper/capture.hpp"
#include "dapper/config.hpp"
#include "dapper/dapper.hpp"
#include "dapper/experiment.hpp"
#include "dapper/geometry.hpp"
#include "dapper/ground_truth.hpp"
#include "dapper/llbc.hpp"
#include "dapper/random.hpp"
#include "dapper/report.hpp"
#include "dapper/simulator.hpp"
#include "dapper/workload.hpp"
