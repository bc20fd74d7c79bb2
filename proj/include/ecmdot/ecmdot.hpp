#pragma once

#include "ecmdot/aligned.hpp"
#include "ecmdot/bench.hpp"
#include "ecmdot/ecm.hpp"
#include "ecmdot/error.hpp"
#include "ecmdot/generator.hpp"
#include "ecmdot/kernel.hpp"
#include "ecmdot/machine.hpp"
#include "ecmdot/oracle.hpp"
#include "ecmdot/reduction.hpp"
#include "ecmdot/resolve.hpp"
#include "ecmdot/selftest.hpp"
#include "ecmdot/shorthand.hpp"
