// SPDX-License-Identifier: Apache-2.0

#ifndef PSOPT_PSOPT_HPP
#define PSOPT_PSOPT_HPP

#include "psopt/common.hpp"
#include "psopt/descriptor.hpp"
#include "psopt/framework.hpp"
#include "psopt/io.hpp"
#include "psopt/krylov.hpp"
#include "psopt/matfun.hpp"
#include "psopt/mmio.hpp"
#include "psopt/optim.hpp"
#include "psopt/psa.hpp"
#include "psopt/sigma.hpp"
#include "psopt/synthetic.hpp"

#endif // PSOPT_PSOPT_HPP
