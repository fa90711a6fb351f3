#pragma once

#include "pfem/errors.hpp"
#include "pfem/mesh.hpp"
#include "pfem/fe_basis.hpp"
#include "pfem/manifolds.hpp"
#include "pfem/interpolation.hpp"
#include "pfem/norms_errors.hpp"
#include "pfem/harmonic_energy.hpp"
#include "pfem/riemannian_solver.hpp"
#include "pfem/test_maps.hpp"
#include "pfem/study.hpp"
