#pragma once

#include "config.hpp"
#include "diagnostics.hpp"
#include "experiment.hpp"
#include "fem.hpp"
#include "mesh.hpp"
#include "potential.hpp"
#include "schemes.hpp"
#include "tensor_core.hpp"
#include "vtk.hpp"
