#ifndef HESSVAR_HESSVAR_HPP
#define HESSVAR_HESSVAR_HPP

#include "hessvar/errors.hpp"
#include "hessvar/hessian_core.hpp"
#include "hessvar/quadrature.hpp"
#include "hessvar/radial_calculus.hpp"
#include "hessvar/nonlinearity.hpp"
#include "hessvar/flow_engine.hpp"
#include "hessvar/spectral.hpp"
#include "hessvar/bvp_shooting.hpp"
#include "hessvar/sharp_constants.hpp"
#include "hessvar/variational_drivers.hpp"

#endif  // HESSVAR_HESSVAR_HPP
