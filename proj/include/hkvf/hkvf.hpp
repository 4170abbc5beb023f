#pragma once

#include "hkvf/errors.hpp"
#include "hkvf/mobius.hpp"
#include "hkvf/surfaces.hpp"
#include "hkvf/expr.hpp"
#include "hkvf/ode.hpp"
#include "hkvf/geometry.hpp"
#include "hkvf/trajectory.hpp"
#include "hkvf/conformal_maps.hpp"
#include "hkvf/flowgroup.hpp"
#include "hkvf/verify.hpp"
#include "hkvf/classify.hpp"
#include "hkvf/collar.hpp"
#include "hkvf/config.hpp"
#include "hkvf/report.hpp"
