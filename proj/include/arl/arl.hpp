#pragma once

#include "arl/algorithms.hpp"
#include "arl/environments.hpp"
#include "arl/errors.hpp"
#include "arl/harness.hpp"
#include "arl/mdp.hpp"
#include "arl/oracle.hpp"
#include "arl/parallel.hpp"
#include "arl/policy.hpp"
#include "arl/policy_io.hpp"
#include "arl/rng.hpp"
#include "arl/verify.hpp"
