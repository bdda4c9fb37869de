#ifndef KINEVO_KINEVO_HPP
#define KINEVO_KINEVO_HPP

#include "kinevo/best_response.hpp"
#include "kinevo/common.hpp"
#include "kinevo/equilibria.hpp"
#include "kinevo/harness.hpp"
#include "kinevo/kernels.hpp"
#include "kinevo/kinetic.hpp"
#include "kinevo/markov.hpp"
#include "kinevo/payoff.hpp"
#include "kinevo/planning.hpp"

#endif  // KINEVO_KINEVO_HPP
