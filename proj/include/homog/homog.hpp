#pragma once

#include "homog/assembly.hpp"
#include "homog/cell.hpp"
#include "homog/contact.hpp"
#include "homog/io.hpp"
#include "homog/linsolve.hpp"
#include "homog/mesh.hpp"
#include "homog/metrics.hpp"
#include "homog/multigrid.hpp"
#include "homog/q1.hpp"
#include "homog/recon.hpp"
#include "homog/sparse.hpp"
#include "homog/study.hpp"
