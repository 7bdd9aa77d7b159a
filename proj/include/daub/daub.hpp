// daub.hpp - everything at once.
#pragma once
#include "bound_estimator.hpp"
#include "config_file.hpp"
#include "core_model.hpp"
#include "errors.hpp"
#include "external_learner.hpp"
#include "idealized_analysis.hpp"
#include "learners.hpp"
#include "reporting.hpp"
#include "scheduler.hpp"
#include "worker_protocol.hpp"
