#ifndef ASSEMBLY_ASSEMBLY_HPP
#define ASSEMBLY_ASSEMBLY_HPP

#include "vec3.hpp"
#include "errors.hpp"
#include "potential.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "integrators.hpp"
#include "schedule.hpp"
#include "saa.hpp"
#include "optimizer.hpp"
#include "verifier.hpp"
#include "io.hpp"
#include "config.hpp"
#include "commands.hpp"

#endif
