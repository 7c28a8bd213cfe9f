#pragma once

#include <manadmm/core.hpp>
#include <manadmm/diagnostics.hpp>
#include <manadmm/linop.hpp>
#include <manadmm/manifold.hpp>
#include <manadmm/problems.hpp>
#include <manadmm/prox.hpp>
#include <manadmm/solver/aradmm.hpp>
#include <manadmm/solver/baselines.hpp>
#include <manadmm/solver/schedule.hpp>
#include <manadmm/solver/trace.hpp>
