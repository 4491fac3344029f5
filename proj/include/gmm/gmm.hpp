#pragma once

#include "gmm/dataset.hpp"
#include "gmm/error.hpp"
#include "gmm/eval.hpp"
#include "gmm/influence.hpp"
#include "gmm/kernel.hpp"
#include "gmm/linalg.hpp"
#include "gmm/model_io.hpp"
#include "gmm/models.hpp"
#include "gmm/parallel.hpp"
#include "gmm/qp.hpp"
#include "gmm/rng.hpp"
