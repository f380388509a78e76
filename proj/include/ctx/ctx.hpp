#pragma once

#include "ctx/core_model.hpp"
#include "ctx/coupling_engine.hpp"
#include "ctx/coupling_schemes.hpp"
#include "ctx/epr_analysis.hpp"
#include "ctx/error.hpp"
#include "ctx/format.hpp"
#include "ctx/lp.hpp"
#include "ctx/random.hpp"
#include "ctx/rational.hpp"
#include "ctx/selectivity.hpp"
#include "ctx/system_document.hpp"
