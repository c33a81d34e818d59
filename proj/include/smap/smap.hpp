#pragma once

#include "smap/config.hpp"
#include "smap/core.hpp"
#include "smap/error.hpp"
#include "smap/eval.hpp"
#include "smap/fusion.hpp"
#include "smap/io.hpp"
#include "smap/kdtree.hpp"
#include "smap/keyframe.hpp"
#include "smap/marching_cubes.hpp"
#include "smap/mesh.hpp"
#include "smap/mvs.hpp"
#include "smap/parallel.hpp"
#include "smap/pipeline.hpp"
#include "smap/sparse_prior.hpp"
#include "smap/synth.hpp"
